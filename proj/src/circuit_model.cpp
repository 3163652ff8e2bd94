#include "tlsloss/circuit_model.hpp"

#include "tlsloss/constants.hpp"
#include "tlsloss/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tlsloss {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::InvalidModel: return "invalid-model";
        case ErrorKind::InfeasibleGeometry: return "infeasible-geometry";
        case ErrorKind::Underdetermined: return "underdetermined";
        case ErrorKind::NonphysicalFit: return "nonphysical-fit";
        case ErrorKind::InsufficientBaseline: return "insufficient-baseline";
        case ErrorKind::FitFailure: return "fit-failure";
        case ErrorKind::OutOfSpan: return "out-of-span";
        case ErrorKind::IllConditioned: return "ill-conditioned-fit";
        case ErrorKind::InconsistentInputs: return "inconsistent-inputs";
        case ErrorKind::Range: return "range";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
    }
    return "unknown";
}

}  // namespace tlsloss

namespace tlsloss::circuit {

DeviceCircuitModel::DeviceCircuitModel(double inductance, double capacitor_capacitance,
                                       double inductor_capacitance, std::string label)
    : inductance_(inductance),
      capacitor_capacitance_(capacitor_capacitance),
      inductor_capacitance_(inductor_capacitance),
      label_(std::move(label)) {
    if (!(inductance > 0.0) || !std::isfinite(inductance)) {
        throw Error(ErrorKind::InvalidModel, "inductance must be positive");
    }
    if (!(capacitor_capacitance > 0.0) || !std::isfinite(capacitor_capacitance)) {
        throw Error(ErrorKind::InvalidModel, "capacitor capacitance must be positive");
    }
    if (!(inductor_capacitance >= 0.0) || !std::isfinite(inductor_capacitance)) {
        throw Error(ErrorKind::InvalidModel, "inductor capacitance must be non-negative");
    }
}

std::string_view to_string(DesignKind kind) {
    switch (kind) {
        case DesignKind::LePpc: return "LE_PPC";
        case DesignKind::LeIdc: return "LE_IDC";
        case DesignKind::Cpw: return "CPW";
    }
    return "CPW";
}

DesignKind design_kind_from_string(std::string_view text) {
    std::string t(text);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
        return c == ' ' || c == '-' ? '_' : static_cast<char>(std::toupper(c));
    });
    if (t == "LE_PPC" || t == "PPC") return DesignKind::LePpc;
    if (t == "LE_IDC" || t == "IDC") return DesignKind::LeIdc;
    if (t == "CPW") return DesignKind::Cpw;
    throw Error(ErrorKind::Parse, "unknown design kind '" + std::string(text) + "'");
}

void DeviceRecord::validate() const {
    if (!(measured_frequency > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "device " + label + ": f0 must be positive");
    }
    if (design == DesignKind::Cpw && circuit) {
        throw Error(ErrorKind::InvalidArgument,
                    "device " + label + ": CPW records carry no lumped circuit");
    }
    if (arm_pairs && *arm_pairs < 0) {
        throw Error(ErrorKind::InvalidArgument, "device " + label + ": negative arm count");
    }
}

double resonance_frequency(const DeviceCircuitModel& model) {
    return 1.0 / (constants::kTwoPi * std::sqrt(model.inductance() * model.total_capacitance()));
}

double capacitance_from_frequency(double frequency, double inductance, double inductor_capacitance) {
    if (!(frequency > 0.0)) throw Error(ErrorKind::InvalidArgument, "f0 must be positive");
    if (!(inductance > 0.0)) throw Error(ErrorKind::InvalidArgument, "inductance must be positive");
    const double omega = constants::kTwoPi * frequency;
    const double total = 1.0 / (inductance * omega * omega);
    const double capacitor = total - inductor_capacitance;
    if (!(capacitor > 0.0)) {
        std::ostringstream msg;
        msg << "implied total capacitance " << total << " F does not exceed C_L "
            << inductor_capacitance << " F";
        throw Error(ErrorKind::InfeasibleGeometry, msg.str());
    }
    return capacitor;
}

LcFit fit_lc(std::span<const SimulatedPoint> points) {
    if (points.size() < 2) {
        throw Error(ErrorKind::Underdetermined, "fit_lc needs at least two points");
    }
    for (const auto& p : points) {
        if (!(p.frequency > 0.0) || !std::isfinite(p.frequency)) {
            throw Error(ErrorKind::InvalidArgument, "fit_lc: frequencies must be positive");
        }
    }
    const auto [lo, hi] = std::minmax_element(points.begin(), points.end(), [](auto& a, auto& b) {
        return a.capacitor_capacitance < b.capacitor_capacitance;
    });
    if (!(hi->capacitor_capacitance > lo->capacitor_capacitance)) {
        throw Error(ErrorKind::Underdetermined, "fit_lc needs two distinct C_C values");
    }

    // Centre and scale the regressor to keep the normal equations well
    // conditioned; capacitances are ~1e-13 and targets ~1e-21.
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        const double omega = constants::kTwoPi * p.frequency;
        x(i) = p.capacitor_capacitance;
        y(i) = 1.0 / (omega * omega);
    }
    const double x_mean = x.mean();
    const double x_scale = (x.array() - x_mean).abs().maxCoeff();
    const double y_scale = y.cwiseAbs().maxCoeff();
    Eigen::MatrixXd design(n, 2);
    design.col(0).setOnes();
    design.col(1) = (x.array() - x_mean) / x_scale;
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y / y_scale);

    const double slope = coef(1) * y_scale / x_scale;
    const double intercept = coef(0) * y_scale - slope * x_mean;

    LcFit fit;
    fit.inductance = slope;
    fit.inductor_capacitance = intercept / slope;
    const Eigen::VectorXd residual = y - (intercept + slope * x.array()).matrix();
    fit.rms_residual = std::sqrt(residual.squaredNorm() / static_cast<double>(n));

    if (!(fit.inductance > 0.0)) {
        throw Error(ErrorKind::NonphysicalFit, "fit_lc produced non-positive inductance");
    }
    // Tolerate round-off below zero for an ideal C_L = 0 inductor.
    if (fit.inductor_capacitance < 0.0) {
        if (fit.inductor_capacitance > -1e-12 * x.cwiseAbs().maxCoeff()) {
            fit.inductor_capacitance = 0.0;
        } else {
            throw Error(ErrorKind::NonphysicalFit, "fit_lc produced negative C_L");
        }
    }
    return fit;
}

InductorParameters arm_scaling_eval(const ArmScalingModel& scaling, int arm_pairs) {
    if (arm_pairs < 0) throw Error(ErrorKind::InvalidArgument, "arm count must be non-negative");
    const double n = arm_pairs;
    InductorParameters out{scaling.inductance_offset + scaling.inductance_per_arm * n,
                           scaling.capacitance_offset + scaling.capacitance_per_arm * n};
    if (!(out.inductance > 0.0)) {
        throw Error(ErrorKind::NonphysicalFit, "arm scaling gives non-positive inductance");
    }
    if (out.capacitance < 0.0) {
        throw Error(ErrorKind::NonphysicalFit, "arm scaling gives negative C_L");
    }
    return out;
}

ArmScalingModel fit_arm_scaling(std::span<const ArmRow> rows) {
    if (rows.size() < 2) throw Error(ErrorKind::Underdetermined, "arm scaling needs two rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::MatrixXd targets(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = r.arm_pairs;
        targets(i, 0) = r.inductance;
        targets(i, 1) = r.capacitance;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < 2) throw Error(ErrorKind::Underdetermined, "arm scaling needs two distinct N");
    const Eigen::MatrixXd coef = qr.solve(targets);
    return {coef(0, 0), coef(1, 0), coef(0, 1), coef(1, 1)};
}

ParticipationRatios participation_ratios(const DeviceCircuitModel& model) {
    const double total = model.total_capacitance();
    ParticipationRatios p;
    p.capacitor = model.capacitor_capacitance() / total;
    p.inductor = model.inductor_capacitance() / total;
    return p;
}

double combined_loss(const DeviceCircuitModel& model, double capacitor_loss, double inductor_loss) {
    const double total = model.total_capacitance();
    return (model.capacitor_capacitance() * capacitor_loss +
            model.inductor_capacitance() * inductor_loss) / total;
}

std::optional<double> frequency_consistency(const DeviceRecord& record) {
    if (!record.circuit) return std::nullopt;
    const double predicted = resonance_frequency(*record.circuit);
    return (predicted - record.measured_frequency) / record.measured_frequency;
}

}  // namespace tlsloss::circuit
