#include "oracle.hpp"

#include "tlsloss/s21_fit.hpp"
#include "tlsloss/synth.hpp"

#include <catch_amalgamated.hpp>

#include <cstring>

using namespace tlsloss;
using namespace tlsloss::synth;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GroundTruth device_a_truth() {
    GroundTruth t;
    t.tls.tls_loss_zero = 9.2e-4;
    t.tls.critical_photon_number = 10.0;
    t.tls.beta = 0.5;
    t.tls.high_power_q = 1e6;
    t.tls.angular_frequency = 2.0 * 3.14159265358979323846 * 3.7464e9;
    t.tls.temperature = 0.1;
    t.coupling_q = 1e4;
    t.mismatch_phase = 0.05;
    t.seed = 42;
    for (double n : log_space(0.1, 1e5, 13)) t.plan.powers.push_back(power_for_photon_number(t, n));
    return t;
}

bool bit_identical(const s21::ComplexSweep& a, const s21::ComplexSweep& b) {
    return a.size() == b.size() &&
           std::memcmp(a.frequencies().data(), b.frequencies().data(), a.size() * sizeof(double)) == 0 &&
           std::memcmp(a.transmission().data(), b.transmission().data(), a.size() * sizeof(s21::Complex)) == 0;
}

}  // namespace

TEST_CASE("random streams are the named algorithms") {
    // Required output of a default-seeded MT19937-64 after 10000 draws.
    Rng rng(5489u);
    std::uint64_t last = 0;
    std::mt19937_64 reference(5489u);
    for (int k = 0; k < 10000; ++k) last = reference();
    CHECK(last == 9981545732273789042ULL);

    std::mt19937_64 raw(5489u);
    for (int k = 0; k < 100; ++k) {
        const double expected = static_cast<double>(raw() >> 11) / 9007199254740992.0;
        CHECK(rng.uniform() == expected);
    }

    // SplitMix64 of state 0 + golden gamma.
    CHECK(mix_seed(0, 0) == 0xE220A8397B1DCDAFULL);
    CHECK(mix_seed(1, 0) != mix_seed(0, 1));

    Rng g(11);
    double sum = 0.0, sq = 0.0;
    const int count = 200000;
    for (int k = 0; k < count; ++k) {
        const double x = g.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / count) < 0.01);
    CHECK(std::abs(sq / count - 1.0) < 0.01);
}

TEST_CASE("operating point is self-consistent") {
    const GroundTruth t = device_a_truth();
    const double f0 = t.resonance_frequency();
    for (double p : t.plan.powers) {
        const OperatingPoint op = operating_point(t, p);
        CHECK_THAT(op.internal_q, WithinRel(1.0 / tls::total_loss(op.photon_number, t.tls), 1e-12));
        CHECK_THAT(op.photon_number,
                   WithinRel(double(oracle::photon_number(p, f0, op.internal_q, t.coupling_q)), 1e-9));
    }
    for (double n : {0.3, 10.0, 3e4}) {
        CHECK_THAT(operating_point(t, power_for_photon_number(t, n)).photon_number, WithinRel(n, 1e-9));
    }
}

TEST_CASE("internal loss spans the model endpoints") {
    const GroundTruth t = device_a_truth();
    const long double th = oracle::thermal(3.7464e9L, 0.1L);
    const double low = 1.0 / operating_point(t, 1e-30).internal_q;
    const double high = 1.0 / operating_point(t, 1e-3).internal_q;
    CHECK_THAT(low, WithinRel(double(9.2e-4L * th + 1e-6L), 1e-6));
    CHECK_THAT(low, WithinRel(9.2e-4 * 0.716 + 1e-6, 1e-3));
    CHECK_THAT(high, WithinRel(1e-6, 0.05));
}

TEST_CASE("noise-free sweeps refit to the truth") {
    const GroundTruth t = device_a_truth();
    for (std::size_t i = 0; i < t.plan.powers.size(); i += 4) {
        const auto sweep = generate_s21_sweep(t, i);
        const auto op = operating_point(t, t.plan.powers[i]);
        const auto fit = s21::fit_resonance(sweep);
        CHECK(oracle::rel(fit.parameters.resonance_frequency, t.resonance_frequency()) < 1e-6);
        CHECK(oracle::rel(fit.parameters.internal_q, op.internal_q) < 1e-6);
        CHECK(oracle::rel(fit.parameters.coupling_q, t.coupling_q) < 1e-6);
        CHECK(oracle::rel(fit.parameters.mismatch_phase, t.mismatch_phase) < 1e-6);
        CHECK(sweep.power() == t.plan.powers[i]);
        CHECK(sweep.temperature() == 0.1);
    }
}

TEST_CASE("sweeps with environment and noise") {
    GroundTruth t = device_a_truth();
    t.noise.delay = 25e-9;
    t.noise.baseline = std::polar(0.9, 0.6);
    const auto clean = generate_s21_sweep(t, 6);
    const auto back = s21::preprocess_sweep(clean, 25e-9, std::polar(0.9, 0.6));
    const auto fit = s21::fit_resonance(back);
    CHECK(oracle::rel(fit.parameters.internal_q, operating_point(t, t.plan.powers[6]).internal_q) < 1e-6);

    t.noise.sigma = 1e-3;
    const auto a = generate_s21_sweep(t, 6);
    const auto b = generate_s21_sweep(t, 6);
    CHECK(bit_identical(a, b));
    const auto other = generate_s21_sweep(t, 7);
    CHECK_FALSE(bit_identical(a, other));
    t.seed = 43;
    CHECK_FALSE(bit_identical(a, generate_s21_sweep(t, 6)));
}

TEST_CASE("power sweeps") {
    GroundTruth t = device_a_truth();
    const auto pts = generate_power_sweep(t);
    REQUIRE(pts.size() == t.plan.powers.size());
    const long double th = oracle::thermal(3.7464e9L, 0.1L);
    for (const auto& p : pts) {
        CHECK(p.loss_sigma == 0.0);
        CHECK_THAT(p.loss, WithinRel(double(oracle::total_loss(p.photon_number, 9.2e-4L, 10.0L, 0.5L, 1e6L, th)), 1e-12));
    }
    const auto fit = tls::fit_power_sweep(pts, t.tls.angular_frequency, t.tls.temperature);
    CHECK(oracle::rel(fit.params.tls_loss_zero, 9.2e-4) < 1e-6);
    CHECK(oracle::rel(fit.params.high_power_q, 1e6) < 1e-6);

    t.noise.loss_relative_noise = 0.02;
    const auto noisy = generate_power_sweep(t);
    const auto again = generate_power_sweep(t);
    for (std::size_t k = 0; k < noisy.size(); ++k) {
        CHECK(noisy[k].loss == again[k].loss);
        CHECK_THAT(noisy[k].loss_sigma, WithinRel(0.02 * noisy[k].loss, 1e-15));
        CHECK(noisy[k].loss != pts[k].loss);
    }
}

TEST_CASE("truth validation") {
    GroundTruth t = device_a_truth();
    t.plan.points = 8;
    CHECK_THROWS_AS(t.validate(), Error);
    t = device_a_truth();
    t.noise.sigma = -1.0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = device_a_truth();
    t.coupling_q = 0.0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = device_a_truth();
    CHECK_THROWS_AS(generate_s21_sweep(t, t.plan.powers.size()), Error);
}
