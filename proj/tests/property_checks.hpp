#pragma once

// Randomised invariant checks shared by the unit tests and the acceptance
// runner. Each returns how many cases ran and describes the first violation.

#include "oracle.hpp"

#include "tlsloss/circuit_model.hpp"
#include "tlsloss/error_analysis.hpp"
#include "tlsloss/extraction.hpp"
#include "tlsloss/s21_fit.hpp"
#include "tlsloss/synth.hpp"
#include "tlsloss/tls_model.hpp"

#include <cstring>
#include <random>
#include <sstream>
#include <string>

namespace props {

struct Outcome {
    int cases = 0;
    int failures = 0;
    std::string first;

    void check(bool ok, const std::string& what) {
        ++cases;
        if (ok) return;
        if (failures++ == 0) first = what;
    }
    [[nodiscard]] bool passed() const { return failures == 0; }
};

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
    std::uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

inline std::string describe(std::initializer_list<std::pair<const char*, double>> values) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& [k, v] : values) out << k << '=' << v << ' ';
    return out.str();
}

tlsloss::tls::TlsLossCurveParams random_tls(Draw& d) {
    tlsloss::tls::TlsLossCurveParams p;
    p.tls_loss_zero = d.log_uniform(1e-7, 1e-2);
    p.critical_photon_number = d.log_uniform(1e-2, 1e4);
    p.beta = d.uniform(0.05, 1.0);
    p.high_power_q = d.log_uniform(1e3, 1e9);
    p.angular_frequency = 2.0 * oracle::kPi * d.log_uniform(1e9, 1e10);
    p.temperature = d.log_uniform(0.01, 1.0);
    return p;
}

// total_loss strictly decreasing in n, bounded by total_loss(0) and 1/Q_HP;
// tls_loss increasing in F tan(delta^0) and decreasing in T.
inline Outcome tls_monotonicity(int count, std::uint64_t seed) {
    using namespace tlsloss::tls;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const auto p = random_tls(d);
        const double n1 = d.log_uniform(1e-4, 1e6);
        const double n2 = n1 * d.uniform(1.01, 100.0);
        const double l0 = total_loss(0.0, p), l1 = total_loss(n1, p), l2 = total_loss(n2, p);
        const double floor = 1.0 / p.high_power_q;
        out.check(l1 > l2 && l0 >= l1 && l2 >= floor,
                  "total_loss ordering " + describe({{"n1", n1}, {"n2", n2}, {"l1", l1}, {"l2", l2}}));
        auto bigger = p;
        bigger.tls_loss_zero *= d.uniform(1.01, 10.0);
        out.check(tls_loss(n1, bigger) > tls_loss(n1, p), "tls_loss not increasing in F tan(delta^0)");
        auto warmer = p;
        warmer.temperature *= d.uniform(1.05, 10.0);
        const bool saturated_tanh = tls_loss(n1, warmer) == tls_loss(n1, p) &&
                                    thermal_factor(p.angular_frequency, warmer.temperature) == 1.0;
        out.check(tls_loss(n1, warmer) < tls_loss(n1, p) || saturated_tanh, "tls_loss not decreasing in T");
    }
    return out;
}

tlsloss::circuit::DeviceCircuitModel random_circuit(Draw& d) {
    return {d.log_uniform(0.1e-9, 20e-9), d.log_uniform(1e-15, 5e-12), d.log_uniform(1e-16, 1e-12)};
}

// All three device losses equal x gives inductor loss x and PPC loss x.
inline Outcome uniform_fixed_point(int count, std::uint64_t seed) {
    using namespace tlsloss::extraction;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const double x = d.log_uniform(1e-8, 1e-2);
        const ExtractionInput in{{{x, 0.0}, random_circuit(d)}, {{x, 0.0}, random_circuit(d)}, {x, 0.0}};
        const auto r = extract(in);
        out.check(oracle::rel(r.inductor_loss.value, x) < 1e-12 && oracle::rel(r.ppc_loss.value, x) < 1e-12 &&
                      std::abs(r.fractional_difference.value) < 1e-12,
                  "uniform loss " + describe({{"x", x}, {"ind", r.inductor_loss.value}, {"ppc", r.ppc_loss.value}}));
    }
    return out;
}

// Recombining the extracted PPC and inductor losses with device A's
// participation ratios returns device A's measured loss.
inline Outcome recombination_round_trip(int count, std::uint64_t seed, double tolerance = 1e-15) {
    using namespace tlsloss;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const auto circuit_a = random_circuit(d);
        const double ind = d.log_uniform(1e-8, 1e-3);
        const double ppc = d.log_uniform(1e-8, 1e-2);
        const auto pa = circuit::participation_ratios(circuit_a);
        const double loss_a = pa.capacitor * ppc + pa.inductor * ind;
        const double extracted = extraction::ppc_loss(loss_a, circuit_a.capacitor_capacitance(),
                                                      circuit_a.inductor_capacitance(), ind);
        const double back = circuit::combined_loss(circuit_a, extracted, ind);
        out.check(oracle::rel(back, loss_a) <= tolerance,
                  "round trip " + describe({{"loss_a", loss_a}, {"back", back}, {"rel", oracle::rel(back, loss_a)}}));
    }
    return out;
}

// PPC loss affine in device A loss, inductor loss affine in device B loss,
// and the single measurement underestimates exactly when tanL < tanPPC.
inline Outcome extraction_linearity(int count, std::uint64_t seed) {
    using namespace tlsloss::extraction;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const auto ca = random_circuit(d);
        const auto cb = random_circuit(d);
        const double ind = d.log_uniform(1e-8, 1e-3);
        const double a1 = d.log_uniform(1e-6, 1e-2), a2 = d.log_uniform(1e-6, 1e-2);
        auto ppc_of = [&](double a) {
            return ppc_loss(a, ca.capacitor_capacitance(), ca.inductor_capacitance(), ind);
        };
        try {
            ppc_of(std::min(a1, a2));
        } catch (const InconsistentInputs&) {
            continue;
        }
        const double mid = ppc_of(0.5 * (a1 + a2));
        const double scale = std::max(std::abs(ppc_of(a1)), std::abs(ppc_of(a2)));
        out.check(std::abs(0.5 * (ppc_of(a1) + ppc_of(a2)) - mid) <= 1e-13 * scale, "PPC loss not affine in A");

        const double proxy = d.log_uniform(1e-8, 1e-4);
        const double b_min = proxy * cb.capacitor_capacitance() / cb.total_capacitance();
        const double b1 = b_min * d.uniform(1.01, 100.0), b2 = b_min * d.uniform(1.01, 100.0);
        auto ind_of = [&](double b) {
            return inductor_loss(b, cb.capacitor_capacitance(), cb.inductor_capacitance(), proxy);
        };
        const double iscale = std::max(ind_of(b1), ind_of(b2));
        out.check(std::abs(0.5 * (ind_of(b1) + ind_of(b2)) - ind_of(0.5 * (b1 + b2))) <= 1e-12 * iscale,
                  "inductor loss not affine in B");

        const double ppc = ppc_of(a1);
        if (ind == ppc) continue;
        const bool under = single_measurement_estimate(a1) < ppc;
        out.check(under == (ind < ppc), "single-measurement sign " + describe({{"ind", ind}, {"ppc", ppc}, {"a", a1}}));
    }
    return out;
}

// Sign, bound with monotone approach, scale invariance, p_L = 0.
inline Outcome sigma_err_properties(int count, std::uint64_t seed) {
    using namespace tlsloss::error_analysis;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const double c = d.log_uniform(1e-9, 1e-1), l = d.log_uniform(1e-9, 1e-1);
        const double p = d.uniform(0.0, 0.99);
        const double s = sigma_err(c, l, p);
        if (p > 0.0 && c != l) out.check((s > 0.0) == (l > c) && (s < 0.0) == (l < c), "sign");
        const double factor = d.log_uniform(1e-3, 1e3);
        out.check(std::abs(sigma_err(c * factor, l * factor, p) - s) <= 1e-13 * std::max(1.0, std::abs(s)),
                  "scale invariance " + describe({{"c", c}, {"l", l}, {"p", p}, {"f", factor}}));
        out.check(sigma_err(c, l, 0.0) == 0.0, "p_L = 0 must give zero");
        if (c > l) {
            const double bound = p / (1.0 - p);
            const double further = sigma_err(c * d.uniform(1.5, 100.0), l, p);
            out.check(std::abs(s) < bound && std::abs(further) > std::abs(s) && std::abs(further) < bound,
                      "bound/monotone " + describe({{"c", c}, {"l", l}, {"p", p}}));
        }
        out.check(std::abs(s - double(oracle::sigma_err(c, l, p))) <= 1e-13 * std::max(1.0, std::abs(s)),
                  "oracle mismatch");
    }
    return out;
}

// Equal (truth, seed) gives bit-identical sweeps and power sweeps.
inline Outcome seed_determinism(int count, std::uint64_t seed) {
    using namespace tlsloss;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        synth::GroundTruth t;
        t.tls = random_tls(d);
        t.tls.high_power_q = d.log_uniform(1e4, 1e7);
        t.coupling_q = d.log_uniform(1e3, 1e6);
        t.mismatch_phase = d.uniform(-0.5, 0.5);
        t.plan.points = 16 + static_cast<std::size_t>(d.bits() % 48);
        t.plan.powers = {d.log_uniform(1e-20, 1e-12), d.log_uniform(1e-20, 1e-12)};
        t.noise.sigma = d.log_uniform(1e-5, 1e-2);
        t.noise.delay = d.uniform(0.0, 80e-9);
        t.noise.loss_relative_noise = d.uniform(0.0, 0.05);
        t.seed = d.bits();
        const auto idx = static_cast<std::size_t>(d.bits() % 2);
        const auto a = synth::generate_s21_sweep(t, idx);
        const auto b = synth::generate_s21_sweep(t, idx);
        const bool same_sweep =
            std::memcmp(a.frequencies().data(), b.frequencies().data(), a.size() * sizeof(double)) == 0 &&
            std::memcmp(a.transmission().data(), b.transmission().data(), a.size() * sizeof(s21::Complex)) == 0;
        const auto pa = synth::generate_power_sweep(t);
        const auto pb = synth::generate_power_sweep(t);
        bool same_power = pa.size() == pb.size();
        for (std::size_t i = 0; same_power && i < pa.size(); ++i) {
            same_power = std::memcmp(&pa[i], &pb[i], sizeof(pa[i])) == 0;
        }
        out.check(same_sweep && same_power, "seed determinism");
    }
    return out;
}

// Circuit invariants: frequency/capacitance round trip, participation scale
// invariance, frequency decreasing in each element.
inline Outcome circuit_properties(int count, std::uint64_t seed) {
    using namespace tlsloss::circuit;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const auto m = random_circuit(d);
        const double f = resonance_frequency(m);
        const double back = capacitance_from_frequency(f, m.inductance(), m.inductor_capacitance());
        out.check(oracle::rel(back, m.capacitor_capacitance()) < 1e-12,
                  "capacitance round trip " + describe({{"C_C", m.capacitor_capacitance()}, {"back", back}}));
        const double s = d.log_uniform(1e-3, 1e3);
        const auto p1 = participation_ratios(m);
        const auto p2 = participation_ratios(
            DeviceCircuitModel(m.inductance(), s * m.capacitor_capacitance(), s * m.inductor_capacitance()));
        out.check(std::abs(p1.inductor - p2.inductor) < 1e-15 && std::abs(p1.capacitor - p2.capacitor) < 1e-15,
                  "participation scale invariance");
        const double g = d.uniform(1.001, 3.0);
        out.check(resonance_frequency({m.inductance() * g, m.capacitor_capacitance(), m.inductor_capacitance()}) < f &&
                      resonance_frequency({m.inductance(), m.capacitor_capacitance() * g, m.inductor_capacitance()}) < f &&
                      resonance_frequency({m.inductance(), m.capacitor_capacitance(), m.inductor_capacitance() * g}) < f,
                  "frequency not decreasing");
    }
    return out;
}

// preprocess(apply(delay, baseline)) is the identity for explicit arguments.
inline Outcome environment_identity(int count, std::uint64_t seed) {
    using namespace tlsloss;
    Outcome out;
    Draw d(seed);
    for (int k = 0; k < count; ++k) {
        const s21::ResonatorParameters p{d.log_uniform(1e9, 1e10), d.log_uniform(1e3, 1e7), d.log_uniform(1e3, 1e7),
                                         d.uniform(-1.0, 1.0)};
        const double ql = 1.0 / (1.0 / p.internal_q + 1.0 / p.coupling_q);
        const auto sweep = synth::resonator_sweep(p, 10.0 * p.resonance_frequency / ql, 64, {}, 0);
        const double delay = d.uniform(-100e-9, 100e-9);
        const s21::Complex b = std::polar(d.uniform(0.1, 2.0), d.uniform(-3.1, 3.1));
        const auto back = s21::preprocess_sweep(s21::apply_environment(sweep, delay, b), delay, b);
        double worst = 0.0;
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            worst = std::max(worst, std::abs(back.transmission()[i] - sweep.transmission()[i]));
        }
        out.check(worst < 1e-12, "environment identity " + describe({{"worst", worst}, {"delay", delay}}));
    }
    return out;
}

}  // namespace props
