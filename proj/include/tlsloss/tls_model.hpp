#pragma once

// Weak-field TLS loss versus photon number and temperature, plus a
// power-independent high-power loss floor.

#include "tlsloss/error.hpp"

#include <span>
#include <string>
#include <vector>

namespace tlsloss::tls {

struct TlsLossCurveParams {
    double tls_loss_zero = 0.0;          // F tan(delta_TLS^0) at n = 0, T = 0
    double critical_photon_number = 1.0; // n_c
    double beta = 0.5;
    double high_power_q = 1e6;           // Q_HP
    double angular_frequency = 0.0;     // w0, rad/s
    double temperature = 0.0;           // K

    /// Throws InvalidArgument when any invariant fails.
    void validate() const;
};

struct PowerSweepPoint {
    double photon_number = 0.0;  // <n>, or <n>/n_c for fractional data
    double loss = 0.0;           // measured total tan(delta)
    double loss_sigma = 0.0;     // 0 means "unknown"
};

/// tanh(hbar w0 / (2 k_B T)).
[[nodiscard]] double thermal_factor(double angular_frequency, double temperature);

[[nodiscard]] double tls_loss(double photon_number, const TlsLossCurveParams& params);

/// tls_loss + 1/Q_HP.
[[nodiscard]] double total_loss(double photon_number, const TlsLossCurveParams& params);

[[nodiscard]] inline double loss_at_zero(const TlsLossCurveParams& params) {
    return params.tls_loss_zero;
}

enum class BetaMode { Fixed, Free };

struct TlsFitOptions {
    BetaMode beta_mode = BetaMode::Fixed;
    double beta = 0.5;                 // used when fixed, initial value when free
    bool fractional_photon_number = false;  // x-axis already <n>/n_c; n_c pinned to 1
    int max_iterations = 200;
    double relative_cost_tolerance = 1e-12;
    double minimum_decades = 2.0;
    std::size_t minimum_points = 5;
    /// Points required on each side of n_c.
    std::size_t minimum_points_per_regime = 2;
};

struct TlsFitResult {
    TlsLossCurveParams params;
    double tls_loss_zero_sigma = 0.0;
    double critical_photon_number_sigma = 0.0;
    double beta_sigma = 0.0;
    double high_power_q_sigma = 0.0;
    double rms_log_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    /// False when n_c was pinned to 1 because the input was fractional.
    bool critical_photon_number_physical = true;
    /// False when the power dependence is not significant against a constant
    /// loss. The constant model is then reported (tls_loss_zero = 0) and n_c,
    /// beta are meaningless.
    bool tls_detected = true;
    bool weighted = false;
};

class TlsFitFailure : public Error {
public:
    TlsFitFailure(const std::string& message, TlsFitResult best)
        : Error(ErrorKind::FitFailure, message), best_(std::move(best)) {}
    [[nodiscard]] const TlsFitResult& best() const noexcept { return best_; }

private:
    TlsFitResult best_;
};

/// Weighted nonlinear least squares of log(loss) for (F tan(delta^0), n_c,
/// Q_HP[, beta]). The thermal factor is evaluated from w0 and T, not fitted.
/// Weights are loss/sigma when every point carries a positive sigma.
///
/// Throws InvalidArgument for too few points or too narrow a photon-number
/// span, IllConditioned when the data do not populate both sides of n_c,
/// TlsFitFailure on non-convergence.
[[nodiscard]] TlsFitResult fit_power_sweep(std::span<const PowerSweepPoint> points,
                                           double angular_frequency, double temperature,
                                           const TlsFitOptions& options = {});

}  // namespace tlsloss::tls
