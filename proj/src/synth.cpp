#include "tlsloss/synth.hpp"

#include "tlsloss/constants.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>

namespace tlsloss::synth {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = constants::kTwoPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void GroundTruth::validate() const {
    tls.validate();
    if (!(coupling_q > 0.0)) throw Error(ErrorKind::InvalidArgument, "Q_c must be positive");
    if (plan.points < s21::kMinimumSweepLength) {
        throw Error(ErrorKind::InvalidArgument, "sweep plan needs at least 16 points");
    }
    if (!(plan.span_linewidths > 0.0)) throw Error(ErrorKind::InvalidArgument, "span must be positive");
    if (!(noise.sigma >= 0.0) || !(noise.loss_relative_noise >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise levels must be >= 0");
    }
    for (double p : plan.powers) {
        if (!(p > 0.0)) throw Error(ErrorKind::InvalidArgument, "powers must be positive");
    }
}

double GroundTruth::resonance_frequency() const { return tls.angular_frequency / constants::kTwoPi; }

OperatingPoint operating_point(const GroundTruth& truth, double power_watts) {
    const double f0 = truth.resonance_frequency();
    const auto internal_q = [&](double n) { return 1.0 / tls::total_loss(n, truth.tls); };
    const auto mismatch = [&](double n) {
        return s21::photon_number(power_watts, f0, internal_q(n), truth.coupling_q) - n;
    };
    // Q_i <= Q_HP bounds the photon number from above.
    const double upper = s21::photon_number(power_watts, f0, truth.tls.high_power_q, truth.coupling_q);
    if (mismatch(upper) >= 0.0) return {upper, internal_q(upper)};
    std::uintmax_t iterations = 200;
    const auto [lo, hi] = boost::math::tools::toms748_solve(
        mismatch, 0.0, upper, boost::math::tools::eps_tolerance<double>(52), iterations);
    const double n = 0.5 * (lo + hi);
    return {n, internal_q(n)};
}

double power_for_photon_number(const GroundTruth& truth, double photon_number) {
    const double internal_q = 1.0 / tls::total_loss(photon_number, truth.tls);
    const double loaded_q = 1.0 / (1.0 / internal_q + 1.0 / truth.coupling_q);
    const double omega = truth.tls.angular_frequency;
    return photon_number * truth.coupling_q * constants::kHbar * omega * omega / (2.0 * loaded_q * loaded_q);
}

s21::ComplexSweep resonator_sweep(const s21::ResonatorParameters& resonator, double span,
                                  std::size_t points, const NoiseSpec& noise, std::uint64_t seed,
                                  double power_watts, double temperature) {
    if (points < s21::kMinimumSweepLength) {
        throw Error(ErrorKind::InvalidArgument, "sweep needs at least 16 points");
    }
    const double f0 = resonator.resonance_frequency;
    std::vector<double> f(points);
    std::vector<s21::Complex> s(points);
    Rng rng(seed);
    for (std::size_t k = 0; k < points; ++k) {
        f[k] = f0 - 0.5 * span + span * static_cast<double>(k) / static_cast<double>(points - 1);
        s[k] = s21::s21_model(f[k], resonator) *
               std::polar(1.0, -constants::kTwoPi * f[k] * noise.delay) * noise.baseline;
        if (noise.sigma > 0.0) {
            const double re = rng.normal();
            const double im = rng.normal();
            s[k] += noise.sigma * s21::Complex(re, im);
        }
    }
    return s21::ComplexSweep(std::move(f), std::move(s), power_watts, temperature);
}

s21::ComplexSweep generate_s21_sweep(const GroundTruth& truth, std::size_t power_index) {
    truth.validate();
    if (power_index >= truth.plan.powers.size()) {
        throw Error(ErrorKind::InvalidArgument, "power index out of range");
    }
    const double power = truth.plan.powers[power_index];
    const OperatingPoint op = operating_point(truth, power);
    s21::ResonatorParameters resonator{truth.resonance_frequency(), op.internal_q, truth.coupling_q,
                                       truth.mismatch_phase};
    const double loaded_q = 1.0 / (1.0 / op.internal_q + 1.0 / truth.coupling_q);
    const double span = truth.plan.span_linewidths * resonator.resonance_frequency / loaded_q;
    return resonator_sweep(resonator, span, truth.plan.points, truth.noise,
                           mix_seed(truth.seed, power_index), power, truth.tls.temperature);
}

namespace {

tls::PowerSweepPoint noisy_point(double n, double loss, double relative, Rng& rng) {
    double value = loss;
    if (relative > 0.0) {
        do {
            value = loss * (1.0 + relative * rng.normal());
        } while (!(value > 0.0));
    }
    return {n, value, relative * value};
}

}  // namespace

std::vector<tls::PowerSweepPoint> generate_power_sweep(const GroundTruth& truth) {
    truth.validate();
    Rng rng(mix_seed(truth.seed, 0xFFFF'FFFFULL));
    std::vector<tls::PowerSweepPoint> out;
    for (double power : truth.plan.powers) {
        const OperatingPoint op = operating_point(truth, power);
        out.push_back(noisy_point(op.photon_number, 1.0 / op.internal_q,
                                  truth.noise.loss_relative_noise, rng));
    }
    return out;
}

std::vector<tls::PowerSweepPoint> power_sweep_at(const tls::TlsLossCurveParams& params,
                                                 std::span<const double> photon_numbers,
                                                 double relative_noise, std::uint64_t seed) {
    params.validate();
    Rng rng(seed);
    std::vector<tls::PowerSweepPoint> out;
    out.reserve(photon_numbers.size());
    for (double n : photon_numbers) {
        out.push_back(noisy_point(n, tls::total_loss(n, params), relative_noise, rng));
    }
    return out;
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
    if (count == 0) return {};
    if (count == 1) return {lo};
    std::vector<double> out(count);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t k = 0; k < count; ++k) {
        out[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
    }
    return out;
}

}  // namespace tlsloss::synth
