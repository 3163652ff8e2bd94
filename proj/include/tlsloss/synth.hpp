#pragma once

// Synthetic measurement generator. Every random draw comes from
// std::mt19937_64 (bit-exact across standard libraries) converted to
// doubles and Gaussians by the fixed recipes in Rng, so fixtures are
// reproducible in any language that implements MT19937-64.

#include "tlsloss/s21_fit.hpp"
#include "tlsloss/tls_model.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tlsloss::synth {

/// MT19937-64 with portable uniform and Gaussian draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// (x >> 11) * 2^-53, in [0, 1).
    double uniform();
    /// Box-Muller, cosine branch then sine branch of each pair.
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// SplitMix64 finaliser, used to derive per-stream seeds.
[[nodiscard]] std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

struct SweepPlan {
    double span_linewidths = 12.0;   // total span in units of f0/Q_l, centred on f0
    std::size_t points = 401;
    std::vector<double> powers;      // W at the device plane
};

struct NoiseSpec {
    double sigma = 0.0;                    // per-quadrature S21 noise
    double delay = 0.0;                    // s
    s21::Complex baseline{1.0, 0.0};
    double loss_relative_noise = 0.0;      // power-sweep multiplicative noise
};

struct GroundTruth {
    tls::TlsLossCurveParams tls;  // carries f0 (as w0) and temperature
    double coupling_q = 3e4;
    double mismatch_phase = 0.0;
    SweepPlan plan;
    NoiseSpec noise;
    std::uint64_t seed = 0;

    void validate() const;
    [[nodiscard]] double resonance_frequency() const;
};

struct OperatingPoint {
    double photon_number = 0.0;
    double internal_q = 0.0;
};

/// Self-consistent (n, Q_i) at drive power P: Q_i = 1/total_loss(n) while
/// n depends on Q_i through the photon-number relation.
[[nodiscard]] OperatingPoint operating_point(const GroundTruth& truth, double power_watts);

/// Drive power that produces photon number n (closed form).
[[nodiscard]] double power_for_photon_number(const GroundTruth& truth, double photon_number);

/// Noise-free model sweep with optional environment and additive noise.
[[nodiscard]] s21::ComplexSweep resonator_sweep(const s21::ResonatorParameters& resonator,
                                                double span, std::size_t points,
                                                const NoiseSpec& noise, std::uint64_t seed,
                                                double power_watts = 0.0,
                                                double temperature = 0.0);

[[nodiscard]] s21::ComplexSweep generate_s21_sweep(const GroundTruth& truth,
                                                   std::size_t power_index);

/// (n, loss, sigma) at each plan power. sigma = relative noise * loss, or 0
/// for noise-free output.
[[nodiscard]] std::vector<tls::PowerSweepPoint> generate_power_sweep(const GroundTruth& truth);

/// Same, at explicit photon numbers rather than powers.
[[nodiscard]] std::vector<tls::PowerSweepPoint> power_sweep_at(
    const tls::TlsLossCurveParams& params, std::span<const double> photon_numbers,
    double relative_noise, std::uint64_t seed);

[[nodiscard]] std::vector<double> log_space(double lo, double hi, std::size_t count);

}  // namespace tlsloss::synth
