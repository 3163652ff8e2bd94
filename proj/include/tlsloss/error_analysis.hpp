#pragma once

// Systematic error of the single measurement technique: the fractional
// difference between a resonator's total loss and the loss of its capacitor,
// with filling factors taken as 1.

#include <limits>
#include <vector>

namespace tlsloss::error_analysis {

struct ErrorRegimePoint {
    double capacitor_loss = 0.0;
    double inductor_loss = 0.0;
    double inductor_participation = 0.0;
    double sigma_err = 0.0;

    [[nodiscard]] double magnitude() const;
};

/// p_L (tanL - tanC) / ((1 - p_L) tanC + p_L tanL).
[[nodiscard]] double sigma_err(double capacitor_loss, double inductor_loss,
                               double inductor_participation);

[[nodiscard]] ErrorRegimePoint evaluate(double capacitor_loss, double inductor_loss,
                                        double inductor_participation);

/// |sigma_err| as tanC / tanL grows without bound: p_L / (1 - p_L).
[[nodiscard]] double high_capacitor_loss_asymptote(double inductor_participation);

[[nodiscard]] bool measurable_regime(double capacitor_loss, double inductor_loss,
                                     double inductor_participation, double threshold = 0.1);

/// Capacitor-loss interval on which |sigma_err| <= threshold. The upper
/// bound is +inf when the asymptote itself is within the threshold.
struct MeasurableInterval {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
};

[[nodiscard]] MeasurableInterval measurable_interval(double inductor_loss,
                                                     double inductor_participation,
                                                     double threshold = 0.1);

/// Log-spaced grid [lo, hi] with `points` samples. A single point requires
/// lo == hi.
struct LogGrid {
    double lo = 1e-8;
    double hi = 1e-1;
    int points = 71;

    [[nodiscard]] std::vector<double> values() const;
};

/// Which parameter varies from curve to curve; the x axis is always the
/// capacitor loss.
enum class CurveFamily {
    InductorLoss,   // fixed participation, one curve per inductor loss
    Participation,  // fixed inductor loss, one curve per participation
};

struct ErrorMapSpec {
    CurveFamily family = CurveFamily::InductorLoss;
    double fixed_value = 0.102;  // p_L for InductorLoss, tanL for Participation
    std::vector<double> curve_values;
    LogGrid grid;
};

struct ErrorMap {
    ErrorMapSpec spec;
    std::vector<double> capacitor_losses;
    /// points[curve][grid index]
    std::vector<std::vector<ErrorRegimePoint>> points;
};

/// Throws Range on non-positive bounds, lo > hi, or fewer than one point.
[[nodiscard]] ErrorMap error_map(const ErrorMapSpec& spec);

/// Presets matching the two classic views: sweep of inductor loss at
/// p_L = 0.102, and sweep of participation at tanL = 1.12e-5.
[[nodiscard]] ErrorMapSpec inductor_loss_preset();
[[nodiscard]] ErrorMapSpec participation_preset();

}  // namespace tlsloss::error_analysis
