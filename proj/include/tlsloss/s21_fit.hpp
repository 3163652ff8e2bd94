#pragma once

// Complex transmission fitting for notch-type (side-coupled) resonators.
// Fits are done on 1/S21, where the resonance traces a circle:
//
//   1/S21(f) = 1 + (Q_i / Q_c) e^{i phi} / (1 + 2 i Q_i (f - f0) / f0)
//
// The circle passes through 1 far off resonance and has diameter Q_i / Q_c.

#include "tlsloss/error.hpp"

#include <complex>
#include <optional>
#include <vector>

namespace tlsloss::s21 {

using Complex = std::complex<double>;

/// Frequency-ordered transmission samples at one power and temperature.
class ComplexSweep {
public:
    /// Throws InvalidArgument on fewer than 16 samples, size mismatch,
    /// non-increasing frequencies or non-finite values.
    ComplexSweep(std::vector<double> frequencies, std::vector<Complex> transmission,
                 double power_watts = 0.0, double temperature_kelvin = 0.0);

    [[nodiscard]] const std::vector<double>& frequencies() const noexcept { return frequencies_; }
    [[nodiscard]] const std::vector<Complex>& transmission() const noexcept { return transmission_; }
    [[nodiscard]] double power() const noexcept { return power_; }
    [[nodiscard]] double temperature() const noexcept { return temperature_; }
    [[nodiscard]] std::size_t size() const noexcept { return frequencies_.size(); }

private:
    std::vector<double> frequencies_;
    std::vector<Complex> transmission_;
    double power_;
    double temperature_;
};

inline constexpr std::size_t kMinimumSweepLength = 16;

struct ResonatorParameters {
    double resonance_frequency = 0.0;  // Hz
    double internal_q = 0.0;
    double coupling_q = 0.0;           // magnitude
    double mismatch_phase = 0.0;       // rad
};

struct ResonatorFitResult {
    ResonatorParameters parameters;
    ResonatorParameters uncertainties;  // one standard deviation
    double rms_residual = 0.0;          // RMS |1/S21 - model|
    int iterations = 0;
    bool converged = false;

    /// Internal loss tan(delta) = 1/Q_i.
    [[nodiscard]] double internal_loss() const { return 1.0 / parameters.internal_q; }
    [[nodiscard]] double internal_loss_sigma() const {
        return uncertainties.internal_q / (parameters.internal_q * parameters.internal_q);
    }
};

/// Raised when the optimiser fails; carries the best iterate found.
class FitFailure : public Error {
public:
    FitFailure(const std::string& message, ResonatorFitResult best)
        : Error(ErrorKind::FitFailure, message), best_(std::move(best)) {}
    [[nodiscard]] const ResonatorFitResult& best() const noexcept { return best_; }

private:
    ResonatorFitResult best_;
};

[[nodiscard]] Complex inverse_s21_model(double frequency, const ResonatorParameters& parameters);

/// Direct transmission, the reciprocal of inverse_s21_model.
[[nodiscard]] Complex s21_model(double frequency, const ResonatorParameters& parameters);

/// Multiplies by e^{-2 pi i f delay} and by the baseline; the forward
/// distortion that preprocess_sweep removes.
[[nodiscard]] ComplexSweep apply_environment(const ComplexSweep& sweep, double delay,
                                             Complex baseline);

struct EnvironmentEstimate {
    double delay = 0.0;
    Complex baseline{1.0, 0.0};
};

/// Estimates cable delay and baseline from the off-resonant wings (outer 10%
/// of points, split between both ends). The wing phase slope seeds a 1-D
/// search that makes the sweep most circular. Throws InsufficientBaseline
/// when fewer than 4 wing points exist.
[[nodiscard]] EnvironmentEstimate estimate_environment(const ComplexSweep& sweep);

/// Removes e^{-2 pi i f delay} and divides by the baseline. Missing
/// arguments are estimated with estimate_environment.
[[nodiscard]] ComplexSweep preprocess_sweep(const ComplexSweep& sweep,
                                            std::optional<double> delay = std::nullopt,
                                            std::optional<Complex> baseline = std::nullopt);

struct CircleFit {
    Complex center;
    double radius = 0.0;
};

/// Algebraic (Kasa) least-squares circle through weighted points.
[[nodiscard]] CircleFit fit_circle(const std::vector<Complex>& points,
                                   const std::vector<double>& weights = {});

struct FitOptions {
    int max_iterations = 200;
    double relative_cost_tolerance = 1e-12;
    /// A fitted circle whose diameter is less than this multiple of the
    /// RMS residual is rejected as "no resonance".
    double minimum_significance = 5.0;
};

/// Deterministic initial guess: f0 at min |S21|, Q_l from the half-power
/// width of the dip, circle fit for Q_i/Q_c and phi.
[[nodiscard]] ResonatorParameters initial_guess(const ComplexSweep& sweep);

/// Nonlinear least squares on 1/S21 residuals weighted by |S21|^2 (which
/// whitens additive S21 noise). Uncertainties come from the Jacobian at the
/// optimum scaled by the residual variance.
[[nodiscard]] ResonatorFitResult fit_resonance(const ComplexSweep& sweep,
                                               std::optional<ResonatorParameters> guess = std::nullopt,
                                               const FitOptions& options = {});

/// Mean intracavity photon number of a side-coupled resonator driven with
/// power P at the device plane: 2 Q_l^2 P / (Q_c hbar w0^2).
[[nodiscard]] double photon_number(double power_watts, double resonance_frequency,
                                   double internal_q, double coupling_q);

[[nodiscard]] double dbm_to_watts(double dbm);
[[nodiscard]] double watts_to_dbm(double watts);

}  // namespace tlsloss::s21
