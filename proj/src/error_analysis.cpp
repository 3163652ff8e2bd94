#include "tlsloss/error_analysis.hpp"

#include "tlsloss/error.hpp"

#include <cmath>

namespace tlsloss::error_analysis {
namespace {

void check(double capacitor_loss, double inductor_loss, double participation) {
    if (!(capacitor_loss > 0.0) || !(inductor_loss > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "losses must be positive");
    }
    if (!(participation >= 0.0 && participation < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "inductor participation must lie in [0, 1)");
    }
}

}  // namespace

double ErrorRegimePoint::magnitude() const { return std::abs(sigma_err); }

double sigma_err(double capacitor_loss, double inductor_loss, double inductor_participation) {
    check(capacitor_loss, inductor_loss, inductor_participation);
    const double p = inductor_participation;
    const double total = (1.0 - p) * capacitor_loss + p * inductor_loss;
    return p * (inductor_loss - capacitor_loss) / total;
}

ErrorRegimePoint evaluate(double capacitor_loss, double inductor_loss, double inductor_participation) {
    return {capacitor_loss, inductor_loss, inductor_participation,
            sigma_err(capacitor_loss, inductor_loss, inductor_participation)};
}

double high_capacitor_loss_asymptote(double inductor_participation) {
    if (!(inductor_participation >= 0.0 && inductor_participation < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "inductor participation must lie in [0, 1)");
    }
    return inductor_participation / (1.0 - inductor_participation);
}

bool measurable_regime(double capacitor_loss, double inductor_loss, double inductor_participation,
                       double threshold) {
    return std::abs(sigma_err(capacitor_loss, inductor_loss, inductor_participation)) <= threshold;
}

MeasurableInterval measurable_interval(double inductor_loss, double inductor_participation,
                                       double threshold) {
    check(1.0, inductor_loss, inductor_participation);
    if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be positive");
    const double p = inductor_participation;
    const double t = threshold;
    MeasurableInterval out;
    if (p == 0.0) {
        out.lower = 0.0;
        return out;
    }
    // Solve |sigma| = t for r = tanC / tanL on each side of r = 1.
    out.lower = inductor_loss * std::max(0.0, p * (1.0 - t) / (p + t * (1.0 - p)));
    const double denominator = p - t * (1.0 - p);
    if (denominator > 0.0) out.upper = inductor_loss * p * (1.0 + t) / denominator;
    return out;
}

std::vector<double> LogGrid::values() const {
    if (!(lo > 0.0) || !(hi > 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw Error(ErrorKind::Range, "grid bounds must be positive and finite");
    }
    if (points < 1) throw Error(ErrorKind::Range, "grid needs at least one point");
    if (points == 1) {
        if (lo != hi) throw Error(ErrorKind::Range, "single-point grid requires lo == hi");
        return {lo};
    }
    if (!(hi > lo)) throw Error(ErrorKind::Range, "grid requires lo < hi");
    std::vector<double> out(static_cast<std::size_t>(points));
    const double a = std::log10(lo), b = std::log10(hi);
    for (int k = 0; k < points; ++k) {
        out[static_cast<std::size_t>(k)] = std::pow(10.0, a + (b - a) * k / (points - 1));
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

ErrorMap error_map(const ErrorMapSpec& spec) {
    ErrorMap out;
    out.spec = spec;
    out.capacitor_losses = spec.grid.values();
    if (spec.curve_values.empty()) throw Error(ErrorKind::Range, "error map needs at least one curve");
    for (double curve : spec.curve_values) {
        std::vector<ErrorRegimePoint> row;
        row.reserve(out.capacitor_losses.size());
        for (double c : out.capacitor_losses) {
            if (spec.family == CurveFamily::InductorLoss) {
                row.push_back(evaluate(c, curve, spec.fixed_value));
            } else {
                row.push_back(evaluate(c, spec.fixed_value, curve));
            }
        }
        out.points.push_back(std::move(row));
    }
    return out;
}

ErrorMapSpec inductor_loss_preset() {
    ErrorMapSpec spec;
    spec.family = CurveFamily::InductorLoss;
    spec.fixed_value = 0.102;
    spec.curve_values = {1e-8, 1e-7, 1e-6, 1e-5, 1.12e-5, 1e-4};
    spec.grid = {1e-8, 1e-1, 71};
    return spec;
}

ErrorMapSpec participation_preset() {
    ErrorMapSpec spec;
    spec.family = CurveFamily::Participation;
    spec.fixed_value = 1.12e-5;
    spec.curve_values = {0.001, 0.01, 0.05, 0.102, 0.2, 0.5};
    spec.grid = {1e-8, 1e-1, 71};
    return spec;
}

}  // namespace tlsloss::error_analysis
