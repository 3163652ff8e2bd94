// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "oracle.hpp"
#include "property_checks.hpp"

#include "tlsloss/circuit_model.hpp"
#include "tlsloss/cli.hpp"
#include "tlsloss/error_analysis.hpp"
#include "tlsloss/io.hpp"
#include "tlsloss/s21_fit.hpp"
#include "tlsloss/tls_model.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tlsloss;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> out;
    for (int k = 0; k < count; ++k) out.push_back(lo * std::pow(hi / lo, k / double(count - 1)));
    return out;
}

json extract_table() {
    const fs::path out = fs::temp_directory_path() / "tlsloss_acceptance_extract";
    fs::remove_all(out);
    cli::RunConfig cfg;
    cfg.command = cli::Command::Extract;
    cfg.inputs = {fs::path(TLSLOSS_DATA_DIR) / "table1.csv"};
    cfg.output_dir = out;
    const auto outcome = cli::run(cfg);
    if (outcome.exit_code != 0) throw std::runtime_error("extract exited with " + std::to_string(outcome.exit_code));
    return json::parse(io::read_text(out / "extraction.json"));
}

Verdict table_extraction() {
    const json r = extract_table();
    const double ppc = r["stages"]["ppc_loss"]["value"];
    const double diff = r["stages"]["fractional_difference"]["value"];
    return {ppc >= 0.98e-3 && ppc <= 1.05e-3 && std::abs(diff - 0.11) <= 0.01,
            fmt("ppc_loss=%.6g fractional_difference=%.5f", ppc, diff)};
}

Verdict inductor_stage() {
    const json r = extract_table();
    const double ind = r["stages"]["inductor_loss"]["value"];
    const json& ref = r["references"]["inductor_loss"];
    const bool shown = ref.value("reference_value", 0.0) == 1.12e-5 && ref.contains("note") &&
                       ref.value("computed_value", 0.0) == ind;
    // Independent arithmetic on the fixture values.
    const long double c_idc = 34.7e-15L, c_l = 64.4e-15L, loss_b = 8.9e-6L, proxy = 8.42e-6L;
    const double direct = double(((c_idc + c_l) * loss_b - c_idc * proxy) / c_l);
    const bool ok = std::abs(ind - 9.2e-6) <= 0.1e-6 && oracle::rel(ind, direct) < 1e-12 && shown;
    return {ok, fmt("inductor_loss=%.5g reference=%.3g shown=%s", ind, ref.value("reference_value", 0.0),
                    shown ? "yes" : "no")};
}

Verdict sigma_asymptote() {
    const double s = error_analysis::sigma_err(1e-1, 1.12e-5, 0.102);
    const double zero = error_analysis::sigma_err(1.12e-5, 1.12e-5, 0.102);
    return {std::abs(std::abs(s) - 0.1136) <= 1e-4 && zero == 0.0,
            fmt("|sigma_err|=%.6f limit=%.6f at-equal=%g", std::abs(s), 0.102 / 0.898, zero)};
}

s21::ComplexSweep oracle_sweep(double f0, double qi, double qc, double phi, double sigma, std::uint64_t seed) {
    const double ql = 1.0 / (1.0 / qi + 1.0 / qc);
    const double span = 12.0 * f0 / ql;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
    std::vector<double> f(401);
    std::vector<s21::Complex> s(401);
    for (std::size_t k = 0; k < f.size(); ++k) {
        f[k] = f0 - span / 2.0 + span * double(k) / 400.0;
        s[k] = s21::Complex(1.0L / oracle::inverse_s21(f[k], f0, qi, qc, phi));
        if (sigma > 0.0) s[k] += s21::Complex(noise(rng), noise(rng));
    }
    return {f, s};
}

Verdict s21_round_trip() {
    const double f0 = 4.5548e9, phi = 0.1;
    double worst = 0.0;
    for (double qi : {1e4, 1e5, 1e6}) {
        for (double qc : {1e4, 1e5, 1e6}) {
            const auto p = s21::fit_resonance(oracle_sweep(f0, qi, qc, phi, 0.0, 0)).parameters;
            worst = std::max({worst, oracle::rel(p.resonance_frequency, f0), oracle::rel(p.internal_q, qi),
                              oracle::rel(p.coupling_q, qc), oracle::rel(p.mismatch_phase, phi)});
        }
    }
    std::vector<double> errors;
    const double sigma = 0.01 / std::sqrt(2.0);  // 40 dB against unit off-resonance level
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto fit = s21::fit_resonance(oracle_sweep(f0, 1.19e5, 3e4, phi, sigma, seed));
        errors.push_back(oracle::rel(fit.parameters.internal_q, 1.19e5));
    }
    const double med = median(errors);
    return {worst < 1e-6 && med < 0.01, fmt("noise-free worst rel=%.3g; 40 dB median Qi error=%.4f", worst, med)};
}

Verdict tls_round_trip() {
    const double f0 = 3.7464e9, t = 0.1, w0 = 2.0 * oracle::kPi * f0;
    const long double th = oracle::thermal(f0, t);
    auto points = [&](double f, double nc, double qhp, double noise, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::vector<tls::PowerSweepPoint> out;
        for (double x : log_grid(1e-2, 1e4, 25)) {
            double loss = double(oracle::total_loss(x * nc, f, nc, 0.5L, qhp, th));
            if (noise > 0.0) loss *= 1.0 + noise * gauss(rng);
            out.push_back({x * nc, loss, noise * loss});
        }
        return out;
    };
    double worst = 0.0;
    for (double nc : {1.0, 10.0, 300.0}) {
        const auto fit = tls::fit_power_sweep(points(9.2e-4, nc, 1e6, 0.0, 0), w0, t);
        worst = std::max({worst, oracle::rel(fit.params.tls_loss_zero, 9.2e-4),
                          oracle::rel(fit.params.high_power_q, 1e6)});
    }
    std::vector<double> errors;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto fit = tls::fit_power_sweep(points(9.2e-4, 1.0, 1e6, 0.02, seed), w0, t);
        errors.push_back(oracle::rel(fit.params.tls_loss_zero, 9.2e-4));
    }
    const double med = median(errors);
    return {worst < 1e-6 && med < 0.02, fmt("noise-free worst rel=%.3g; 2%% noise median error=%.4f", worst, med)};
}

Verdict lc_regression() {
    const long double l = 2.42e-9L, c_l = 82.2e-15L;
    std::vector<circuit::SimulatedPoint> pts;
    for (long double c : {100e-15L, 300e-15L, 500e-15L, 700e-15L}) {
        pts.push_back({double(c), double(oracle::lc_frequency(l, c, c_l))});
    }
    const auto four = circuit::fit_lc(pts);
    const auto two = circuit::fit_lc(std::vector<circuit::SimulatedPoint>(pts.begin() + 1, pts.begin() + 3));
    const double worst = std::max({oracle::rel(four.inductance, double(l)), oracle::rel(four.inductor_capacitance, double(c_l)),
                                   oracle::rel(two.inductance, double(l)), oracle::rel(two.inductor_capacitance, double(c_l))});
    return {worst < 1e-9, fmt("worst rel=%.3g", worst)};
}

Verdict thermal() {
    const double f0 = 3.7464e9, t = 0.1;
    const double value = tls::thermal_factor(2.0 * oracle::kPi * f0, t);
    const double independent = double(oracle::thermal(f0, t));
    const bool agrees = oracle::rel(value, independent) < 1e-12;
    return {std::abs(value - 0.7161) <= 1e-4 && agrees,
            fmt("tanh factor=%.5f independent=%.5f target=0.7161+-0.0001", value, independent)};
}

Verdict properties() {
    const std::vector<std::pair<const char*, props::Outcome>> suites{
        {"total_loss", props::tls_monotonicity(1000, 11)},
        {"fixed_point", props::uniform_fixed_point(1000, 12)},
        {"recombination", props::recombination_round_trip(1000, 13)},
        {"sigma_err", props::sigma_err_properties(1000, 14)},
        {"seed", props::seed_determinism(1000, 15)},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, o] : suites) {
        ok = ok && o.passed() && o.cases >= 1000;
        detail += fmt("%s %d/%d ", name, o.cases - o.failures, o.cases);
        if (!o.passed()) detail += "(" + o.first + ") ";
    }
    return {ok, detail};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "table extraction", 1.0, table_extraction},
        {2, "inductor-loss stage", 1.0, inductor_stage},
        {3, "sigma_err asymptote", 1.0, sigma_asymptote},
        {4, "S21 fit round trip", 30.0, s21_round_trip},
        {5, "TLS fit round trip", 30.0, tls_round_trip},
        {6, "LC regression", 1.0, lc_regression},
        {7, "thermal factor", 1.0, thermal},
        {8, "property suites", 60.0, properties},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.budget_s;
        const bool pass = v.pass && in_time;
        if (!pass) ++failed;
        std::printf("%s criterion %d (%s): %s [%.3f s of %.0f s]%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    v.detail.c_str(), elapsed, c.budget_s, in_time ? "" : " over budget");
    }
    std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
