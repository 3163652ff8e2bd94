#include "tlsloss/cli.hpp"
#include "tlsloss/error.hpp"
#include "tlsloss/version.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>

namespace {

using tlsloss::cli::Command;
using tlsloss::cli::RunConfig;

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.push_back(v);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Loss tangent extraction for lumped-element and CPW resonators"};
    app.set_version_flag("--version", std::string(tlsloss::kVersion));
    app.require_subcommand(1);

    RunConfig config;
    std::vector<std::string> inputs;
    std::string out_dir = ".";
    std::string beta_mode = "fixed";
    std::string family = "inductor-loss";
    std::string grid;
    std::string curves;
    std::vector<std::string> loss_overrides;
    std::string roles;
    double fixed_value = 0.0;
    double delay = 0.0;
    std::uint64_t seed = 0;
    double noise = 0.0;
    double loss_noise = 0.0;
    std::size_t points = 0;

    auto common = [&](CLI::App* sub, bool inputs_required) {
        auto* opt = sub->add_option("-i,--input", inputs, "input files or directories");
        if (inputs_required) opt->required();
        sub->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    };

    auto* fit_s21 = app.add_subcommand("fit-s21", "fit complex S21 sweeps and build a power sweep");
    common(fit_s21, true);
    auto* delay_opt = fit_s21->add_option("--delay", delay, "cable delay to remove, s");
    fit_s21->add_flag("--auto-calibrate", config.auto_calibrate, "estimate delay and baseline from the wings");

    auto* fit_tls = app.add_subcommand("fit-tls", "fit the TLS power dependence");
    common(fit_tls, true);
    fit_tls->add_option("--beta", beta_mode, "beta handling")
        ->check(CLI::IsMember({"fixed", "free"}))
        ->capture_default_str();
    fit_tls->add_option("--beta-value", config.beta, "fixed value or starting point")->capture_default_str();

    auto* extract = app.add_subcommand("extract", "separate capacitor and inductor losses");
    common(extract, true);
    extract->add_option("--loss", loss_overrides, "LABEL=tls_fit.json, replaces a tabulated loss");
    extract->add_option("--roles", roles, "labels for the PPC, IDC and CPW devices, comma separated");
    extract->add_option("--threshold", config.threshold, "acceptable |sigma_err|")->capture_default_str();

    auto* error_map = app.add_subcommand("error-map", "single-measurement error over a loss grid");
    error_map->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    error_map->add_option("--family", family, "curve family")
        ->check(CLI::IsMember({"inductor-loss", "participation"}))
        ->capture_default_str();
    auto* fixed_opt = error_map->add_option("--fixed", fixed_value, "fixed p_L or inductor loss");
    error_map->add_option("--curves", curves, "comma-separated curve values");
    error_map->add_option("--grid", grid, "capacitor-loss grid lo:hi:npts");
    error_map->add_option("--threshold", config.threshold, "acceptable |sigma_err|")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "generate synthetic sweeps from a ground truth");
    common(synth, false);
    auto* seed_opt = synth->add_option("--seed", seed, "random seed");
    auto* noise_opt = synth->add_option("--noise", noise, "per-quadrature S21 noise");
    auto* loss_noise_opt = synth->add_option("--loss-noise", loss_noise, "relative noise on the loss curve");
    auto* points_opt = synth->add_option("--points", points, "points per sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : tlsloss::cli::kExitUsage;
    }

    try {
        if (fit_s21->parsed()) config.command = Command::FitS21;
        if (fit_tls->parsed()) config.command = Command::FitTls;
        if (extract->parsed()) config.command = Command::Extract;
        if (error_map->parsed()) config.command = Command::ErrorMap;
        if (synth->parsed()) config.command = Command::Synth;

        for (const auto& in : inputs) config.inputs.emplace_back(in);
        config.output_dir = out_dir;
        config.beta_mode = beta_mode == "free" ? tlsloss::tls::BetaMode::Free : tlsloss::tls::BetaMode::Fixed;
        config.family = family == "participation" ? tlsloss::error_analysis::CurveFamily::Participation
                                                  : tlsloss::error_analysis::CurveFamily::InductorLoss;
        if (*fixed_opt) config.fixed_value = fixed_value;
        if (!curves.empty()) config.curve_values = parse_list(curves);
        if (!grid.empty()) config.grid = tlsloss::cli::parse_grid(grid);
        if (*delay_opt) config.delay = delay;
        for (const auto& item : loss_overrides) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw tlsloss::Error(tlsloss::ErrorKind::InvalidArgument, "--loss expects LABEL=file");
            }
            config.loss_overrides[item.substr(0, eq)] = item.substr(eq + 1);
        }
        if (!roles.empty()) {
            std::stringstream ss(roles);
            std::string label;
            while (std::getline(ss, label, ',')) config.roles.push_back(label);
        }
        if (*seed_opt) config.seed = seed;
        if (*noise_opt) config.noise_sigma = noise;
        if (*loss_noise_opt) config.loss_noise = loss_noise;
        if (*points_opt) config.points = points;
    } catch (const tlsloss::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return tlsloss::cli::exit_status(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: bad option value (" << e.what() << ")\n";
        return tlsloss::cli::kExitUsage;
    }

    const auto outcome = tlsloss::cli::run(config);
    if (outcome.exit_code != 0) {
        std::cerr << outcome.error_report << "\n";
        return outcome.exit_code;
    }
    for (const auto& path : outcome.written) std::cout << path.string() << "\n";
    return 0;
}
