#include "tlsloss/cli.hpp"

#include "tlsloss/circuit_model.hpp"
#include "tlsloss/constants.hpp"
#include "tlsloss/error.hpp"
#include "tlsloss/extraction.hpp"
#include "tlsloss/io.hpp"
#include "tlsloss/s21_fit.hpp"
#include "tlsloss/synth.hpp"
#include "tlsloss/version.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <future>
#include <sstream>

namespace tlsloss::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Input {
    fs::path path;
    std::string text;
    std::string digest;
};

struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
};

Input load(const fs::path& path) {
    Input in;
    in.path = path;
    in.text = io::read_text(path);
    in.digest = io::sha256_hex(in.text);
    return in;
}

// Shortest round-trip text, used for labels rather than data.
std::string shortest(double value) {
    std::array<char, 32> buffer{};
    const auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
    return std::string(buffer.data(), ptr);
}

// JSON has no infinities; unbounded uncertainties are written as strings.
json number(double value) {
    if (std::isfinite(value)) return value;
    if (std::isnan(value)) return "nan";
    return value > 0 ? "inf" : "-inf";
}

json measured(const extraction::Measured& m) { return {{"value", number(m.value)}, {"sigma", number(m.sigma)}}; }

json provenance(Command command, const std::vector<Input>& inputs, json options) {
    json p;
    p["tool"] = "tlsloss";
    p["version"] = kVersion;
    p["command"] = std::string(to_string(command));
    json list = json::array();
    for (const auto& in : inputs) {
        list.push_back({{"file", in.path.filename().string()}, {"sha256", in.digest}});
    }
    p["inputs"] = std::move(list);
    p["options"] = std::move(options);
    return p;
}

std::map<std::string, std::string> csv_provenance(Command command, const std::vector<Input>& inputs) {
    std::map<std::string, std::string> meta;
    meta["tool"] = std::string("tlsloss ") + kVersion;
    meta["command"] = std::string(to_string(command));
    for (const auto& in : inputs) meta["input_sha256." + in.path.filename().string()] = in.digest;
    return meta;
}

std::string csv_header(const std::map<std::string, std::string>& meta) {
    std::string out;
    for (const auto& [k, v] : meta) out += "# " + k + " = " + v + "\n";
    return out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

// ---------------------------------------------------------------- fit-s21

std::vector<fs::path> expand_sweeps(const std::vector<fs::path>& inputs) {
    std::vector<fs::path> out;
    for (const auto& p : inputs) {
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& entry : fs::directory_iterator(p)) {
                const auto name = entry.path().filename().string();
                if (entry.is_regular_file() && entry.path().extension() == ".csv" && name.rfind("sweep", 0) == 0) {
                    found.push_back(entry.path());
                }
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            if (!fs::exists(p)) throw Error(ErrorKind::Io, "input does not exist: " + p.string());
            out.push_back(p);
        }
    }
    if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no sweep files found");
    return out;
}

Outputs fit_s21(const RunConfig& config) {
    const auto paths = expand_sweeps(config.inputs);
    std::vector<Input> inputs;
    std::vector<s21::ComplexSweep> sweeps;
    for (const auto& path : paths) {
        inputs.push_back(load(path));
        try {
            sweeps.push_back(io::parse_sweep(inputs.back().text));
        } catch (const Error& e) {
            throw Error(e.kind(), path.filename().string() + ": " + e.what());
        }
    }
    const double temperature = sweeps.front().temperature();
    for (const auto& s : sweeps) {
        if (std::abs(s.temperature() - temperature) > 1e-12 * std::abs(temperature)) {
            throw Error(ErrorKind::InvalidArgument, "sweeps were taken at different temperatures");
        }
    }

    const bool preprocess = config.delay.has_value() || config.auto_calibrate;
    std::vector<std::future<std::pair<s21::ComplexSweep, s21::ResonatorFitResult>>> jobs;
    for (const auto& sweep : sweeps) {
        jobs.push_back(std::async(std::launch::async, [&sweep, &config, preprocess] {
            // A fixed delay alone keeps a unit baseline; auto-calibration
            // estimates whatever was not supplied.
            std::optional<s21::Complex> baseline;
            if (!config.auto_calibrate) baseline = s21::Complex(1.0);
            s21::ComplexSweep prepared = preprocess ? s21::preprocess_sweep(sweep, config.delay, baseline) : sweep;
            auto fit = s21::fit_resonance(prepared);
            return std::make_pair(std::move(prepared), fit);
        }));
    }

    json results = json::array();
    io::PowerSweepFile power_sweep;
    std::ostringstream curves;
    curves << csv_header(csv_provenance(Command::FitS21, inputs));
    curves << "sweep_index,frequency_hz,re_data,im_data,re_model,im_model\n";
    double f0_sum = 0.0;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        std::pair<s21::ComplexSweep, s21::ResonatorFitResult> job = [&] {
            try {
                return jobs[i].get();
            } catch (const Error& e) {
                throw Error(e.kind(), paths[i].filename().string() + ": " + e.what());
            }
        }();
        const auto& [prepared, fit] = job;
        const auto& p = fit.parameters;
        const auto& u = fit.uncertainties;
        const double power = prepared.power();
        const double n = s21::photon_number(power, p.resonance_frequency, p.internal_q, p.coupling_q);
        results.push_back({
            {"file", paths[i].filename().string()},
            {"power_dbm", s21::watts_to_dbm(power)},
            {"temperature_K", prepared.temperature()},
            {"f0_hz", number(p.resonance_frequency)},
            {"f0_sigma_hz", number(u.resonance_frequency)},
            {"internal_q", number(p.internal_q)},
            {"internal_q_sigma", number(u.internal_q)},
            {"coupling_q", number(p.coupling_q)},
            {"coupling_q_sigma", number(u.coupling_q)},
            {"mismatch_phase_rad", number(p.mismatch_phase)},
            {"mismatch_phase_sigma_rad", number(u.mismatch_phase)},
            {"internal_loss", number(fit.internal_loss())},
            {"internal_loss_sigma", number(fit.internal_loss_sigma())},
            {"photon_number", number(n)},
            {"rms_residual", number(fit.rms_residual)},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
        });
        power_sweep.points.push_back({n, fit.internal_loss(), fit.internal_loss_sigma()});
        f0_sum += p.resonance_frequency;
        for (std::size_t k = 0; k < prepared.size(); ++k) {
            const double f = prepared.frequencies()[k];
            const auto data = prepared.transmission()[k];
            const auto model = s21::s21_model(f, p);
            curves << i << ',' << io::format_double(f) << ',' << io::format_double(data.real()) << ','
                   << io::format_double(data.imag()) << ',' << io::format_double(model.real()) << ','
                   << io::format_double(model.imag()) << '\n';
        }
    }

    power_sweep.resonance_frequency = f0_sum / static_cast<double>(jobs.size());
    power_sweep.temperature = temperature;
    power_sweep.fractional = false;
    power_sweep.metadata = csv_provenance(Command::FitS21, inputs);
    power_sweep.metadata["photon_number_convention"] =
        "side-coupled 2 Q_l^2 P / (Q_c hbar w0^2), P at the device plane";

    json options{{"preprocess", preprocess},
                 {"delay_s", config.delay ? json(*config.delay) : json(nullptr)},
                 {"auto_calibrate", config.auto_calibrate}};
    json report;
    report["provenance"] = provenance(Command::FitS21, inputs, options);
    report["photon_number_convention"] = power_sweep.metadata["photon_number_convention"];
    report["fits"] = std::move(results);

    Outputs out;
    out.add("s21_fits.json", dump(report));
    out.add("power_sweep.csv", io::format_power_sweep(power_sweep));
    out.add("s21_fit_curves.csv", curves.str());
    return out;
}

// ---------------------------------------------------------------- fit-tls

Outputs fit_tls(const RunConfig& config) {
    if (config.inputs.size() != 1) throw Error(ErrorKind::InvalidArgument, "fit-tls takes one power-sweep file");
    const Input input = load(config.inputs.front());
    const io::PowerSweepFile file = io::parse_power_sweep(input.text);

    tls::TlsFitOptions options;
    options.beta_mode = config.beta_mode;
    options.beta = config.beta;
    options.fractional_photon_number = file.fractional;
    const double omega = constants::kTwoPi * file.resonance_frequency;
    const tls::TlsFitResult fit = tls::fit_power_sweep(file.points, omega, file.temperature, options);
    const auto& p = fit.params;

    json result{
        {"tls_loss_zero", number(p.tls_loss_zero)},
        {"tls_loss_zero_sigma", number(fit.tls_loss_zero_sigma)},
        {"critical_photon_number", number(p.critical_photon_number)},
        {"critical_photon_number_sigma", number(fit.critical_photon_number_sigma)},
        {"critical_photon_number_physical", fit.critical_photon_number_physical},
        {"beta", number(p.beta)},
        {"beta_sigma", number(fit.beta_sigma)},
        {"high_power_q", number(p.high_power_q)},
        {"high_power_q_sigma", number(fit.high_power_q_sigma)},
        {"f0_hz", number(file.resonance_frequency)},
        {"temperature_K", number(file.temperature)},
        {"thermal_factor", number(tls::thermal_factor(omega, file.temperature))},
        {"tls_detected", fit.tls_detected},
        {"weighted", fit.weighted},
        {"rms_log_residual", number(fit.rms_log_residual)},
        {"iterations", fit.iterations},
        {"converged", fit.converged},
    };
    json opts{{"beta_mode", config.beta_mode == tls::BetaMode::Fixed ? "fixed" : "free"},
              {"beta", config.beta},
              {"fractional", file.fractional}};
    json report;
    report["provenance"] = provenance(Command::FitTls, {input}, opts);
    report["result"] = std::move(result);

    double n_lo = std::numeric_limits<double>::infinity(), n_hi = 0.0;
    for (const auto& pt : file.points) {
        if (pt.photon_number > 0.0) n_lo = std::min(n_lo, pt.photon_number);
        n_hi = std::max(n_hi, pt.photon_number);
    }
    std::ostringstream curve;
    curve << csv_header(csv_provenance(Command::FitTls, {input}));
    curve << "photon_number_or_fraction,total_loss,tls_loss\n";
    for (double n : synth::log_space(n_lo / 10.0, n_hi * 10.0, 201)) {
        curve << io::format_double(n) << ',' << io::format_double(tls::total_loss(n, p)) << ','
              << io::format_double(tls::tls_loss(n, p)) << '\n';
    }

    Outputs out;
    out.add("tls_fit.json", dump(report));
    out.add("tls_curve.csv", curve.str());
    return out;
}

// ---------------------------------------------------------------- extract

struct RoleSelection {
    const circuit::DeviceRecord* ppc = nullptr;
    const circuit::DeviceRecord* idc = nullptr;
    const circuit::DeviceRecord* cpw = nullptr;
};

RoleSelection select_roles(const std::vector<circuit::DeviceRecord>& devices,
                           const std::vector<std::string>& roles) {
    RoleSelection sel;
    auto by_label = [&](const std::string& label) {
        for (const auto& d : devices) {
            if (d.label == label) return &d;
        }
        throw Error(ErrorKind::InvalidArgument, "no device labelled '" + label + "'");
    };
    auto by_kind = [&](circuit::DesignKind kind) {
        const circuit::DeviceRecord* found = nullptr;
        for (const auto& d : devices) {
            if (d.design != kind) continue;
            if (found) {
                throw Error(ErrorKind::InvalidArgument, "several " + std::string(circuit::to_string(kind)) +
                                                            " devices; choose with --roles A,B,C");
            }
            found = &d;
        }
        if (!found) {
            throw Error(ErrorKind::InvalidArgument, "no " + std::string(circuit::to_string(kind)) + " device");
        }
        return found;
    };
    if (!roles.empty()) {
        if (roles.size() != 3) throw Error(ErrorKind::InvalidArgument, "--roles needs three labels");
        sel = {by_label(roles[0]), by_label(roles[1]), by_label(roles[2])};
    } else {
        sel = {by_kind(circuit::DesignKind::LePpc), by_kind(circuit::DesignKind::LeIdc),
               by_kind(circuit::DesignKind::Cpw)};
    }
    return sel;
}

Outputs extract(const RunConfig& config) {
    if (config.inputs.size() != 1) throw Error(ErrorKind::InvalidArgument, "extract takes one device table");
    std::vector<Input> inputs{load(config.inputs.front())};
    const io::DeviceTable table = io::parse_device_table(inputs.front().text);

    std::map<std::string, extraction::Measured> overrides;
    for (const auto& [label, path] : config.loss_overrides) {
        inputs.push_back(load(path));
        json doc;
        try {
            doc = json::parse(inputs.back().text);
            const json& r = doc.at("result");
            const auto sigma = r.at("tls_loss_zero_sigma");
            overrides[label] = {r.at("tls_loss_zero").get<double>(),
                                sigma.is_number() ? sigma.get<double>() : 0.0};
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, path.filename().string() + ": not a TLS fit result (" + e.what() + ")");
        }
    }

    const RoleSelection roles = select_roles(table.devices, config.roles);
    auto loss_of = [&](const circuit::DeviceRecord& d) -> extraction::Measured {
        if (const auto it = overrides.find(d.label); it != overrides.end()) return it->second;
        if (!d.loss) {
            throw Error(ErrorKind::InvalidArgument,
                        "device " + d.label + " has no loss; add a loss column or --loss " + d.label + "=fit.json");
        }
        return {*d.loss, d.loss_sigma.value_or(0.0)};
    };
    auto circuit_of = [](const circuit::DeviceRecord& d) {
        if (!d.circuit) throw Error(ErrorKind::InvalidArgument, "device " + d.label + " has no circuit model");
        return *d.circuit;
    };
    for (const auto& [label, m] : overrides) {
        if (label != roles.ppc->label && label != roles.idc->label && label != roles.cpw->label) {
            throw Error(ErrorKind::InvalidArgument, "--loss names unused device '" + label + "'");
        }
    }

    const extraction::ExtractionInput input{{loss_of(*roles.ppc), circuit_of(*roles.ppc)},
                                            {loss_of(*roles.idc), circuit_of(*roles.idc)},
                                            loss_of(*roles.cpw)};
    const extraction::ExtractionResult result = extraction::extract(input);

    json devices = json::array();
    for (const auto* d : {roles.ppc, roles.idc, roles.cpw}) {
        json row{{"label", d->label},
                 {"design", std::string(circuit::to_string(d->design))},
                 {"material", d->material},
                 {"f0_hz", d->measured_frequency},
                 {"loss", measured(loss_of(*d))},
                 {"loss_source", overrides.count(d->label) ? "fit-result" : "table"}};
        if (d->circuit) {
            const auto pr = circuit::participation_ratios(*d->circuit);
            row["inductance_h"] = d->circuit->inductance();
            row["capacitor_capacitance_f"] = d->circuit->capacitor_capacitance();
            row["inductor_capacitance_f"] = d->circuit->inductor_capacitance();
            row["capacitor_participation"] = pr.capacitor;
            row["inductor_participation"] = pr.inductor;
            row["circuit_f0_hz"] = circuit::resonance_frequency(*d->circuit);
            row["circuit_f0_relative_deviation"] = *circuit::frequency_consistency(*d);
        }
        devices.push_back(std::move(row));
    }

    const double p_l = circuit::participation_ratios(input.ppc_device.circuit).inductor;
    const double sigma_err = error_analysis::sigma_err(result.ppc_loss.value, result.inductor_loss.value, p_l);

    json stages;
    stages["idc_loss_proxy"] = measured(result.idc_loss);
    stages["idc_loss_proxy"]["approximation"] =
        "CPW loss used as IDC finger loss (CPW gap/width match the IDC fingers)";
    stages["idc_loss_proxy"]["approximated"] = true;
    stages["inductor_loss"] = measured(result.inductor_loss);
    stages["ppc_loss"] = measured(result.ppc_loss);
    stages["ppc_loss"]["filling_factor"] = 1.0;
    stages["single_measurement"] = measured(result.single_measurement);
    stages["single_measurement"]["method"] = "single-measurement";
    stages["fractional_difference"] = measured(result.fractional_difference);

    // Published values shipped with the table are echoed next to the
    // computed ones; they never feed the computation.
    const std::map<std::string, std::pair<std::string, double>> computed = {
        {"reference_inductor_loss", {"inductor_loss", result.inductor_loss.value}},
        {"reference_ppc_loss", {"ppc_loss", result.ppc_loss.value}},
        {"reference_fractional_difference", {"fractional_difference", result.fractional_difference.value}},
        {"reference_inductor_participation", {"inductor_participation", p_l}},
    };
    json references = json::object();
    for (const auto& [key, text] : table.metadata) {
        if (key.rfind("reference_", 0) != 0) continue;
        double ref = 0.0;
        try {
            ref = std::stod(text);
        } catch (const std::exception&) {
            throw Error(ErrorKind::Parse, "metadata " + key + " is not a number");
        }
        json entry{{"reference_value", ref}};
        if (const auto it = computed.find(key); it != computed.end()) {
            entry["quantity"] = it->second.first;
            entry["computed_value"] = it->second.second;
            entry["relative_discrepancy"] = (it->second.second - ref) / ref;
            entry["note"] =
                "reference value quoted with the table; the computed value is direct algebra on the "
                "tabulated (rounded) capacitances and losses";
        }
        references[key.substr(std::string("reference_").size())] = std::move(entry);
    }

    json report;
    report["provenance"] = provenance(Command::Extract, inputs,
                                      {{"roles", {roles.ppc->label, roles.idc->label, roles.cpw->label}},
                                       {"threshold", config.threshold}});
    report["devices"] = std::move(devices);
    report["stages"] = std::move(stages);
    report["single_measurement_error"] = {
        {"inductor_participation", p_l},
        {"sigma_err", sigma_err},
        {"magnitude", std::abs(sigma_err)},
        {"asymptote", error_analysis::high_capacitor_loss_asymptote(p_l)},
        {"threshold", config.threshold},
        {"measurable", error_analysis::measurable_regime(result.ppc_loss.value, result.inductor_loss.value,
                                                         p_l, config.threshold)},
    };
    report["references"] = std::move(references);

    Outputs out;
    out.add("extraction.json", dump(report));
    return out;
}

// ---------------------------------------------------------------- error-map

Outputs error_map(const RunConfig& config) {
    using namespace error_analysis;
    ErrorMapSpec spec = config.family == CurveFamily::InductorLoss ? inductor_loss_preset() : participation_preset();
    if (config.fixed_value) spec.fixed_value = *config.fixed_value;
    if (!config.curve_values.empty()) spec.curve_values = config.curve_values;
    if (config.grid) spec.grid = *config.grid;
    if (!(config.threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "threshold must be positive");
    const ErrorMap map = error_analysis::error_map(spec);
    const bool by_inductor = spec.family == CurveFamily::InductorLoss;

    std::ostringstream table;
    table << csv_header(csv_provenance(Command::ErrorMap, {}));
    table << "# family = " << (by_inductor ? "inductor-loss" : "participation") << "\n";
    table << "# fixed_" << (by_inductor ? "inductor_participation" : "inductor_loss") << " = "
          << io::format_double(spec.fixed_value) << "\n";
    table << "tan_delta_c";
    const std::string prefix = by_inductor ? "tan_delta_l=" : "p_l=";
    for (double v : spec.curve_values) table << ",sigma_err[" << prefix << shortest(v) << "]";
    for (double v : spec.curve_values) table << ",abs_sigma_err[" << prefix << shortest(v) << "]";
    table << "\n";
    for (std::size_t k = 0; k < map.capacitor_losses.size(); ++k) {
        table << io::format_double(map.capacitor_losses[k]);
        for (const auto& row : map.points) table << ',' << io::format_double(row[k].sigma_err);
        for (const auto& row : map.points) table << ',' << io::format_double(row[k].magnitude());
        table << "\n";
    }

    json curves = json::array();
    for (std::size_t c = 0; c < spec.curve_values.size(); ++c) {
        const double inductor_loss = by_inductor ? spec.curve_values[c] : spec.fixed_value;
        const double participation = by_inductor ? spec.fixed_value : spec.curve_values[c];
        const MeasurableInterval interval = measurable_interval(inductor_loss, participation, config.threshold);
        const auto& row = map.points[c];
        curves.push_back({
            {"inductor_loss", inductor_loss},
            {"inductor_participation", participation},
            {"high_capacitor_loss_asymptote", high_capacitor_loss_asymptote(participation)},
            {"measurable_capacitor_loss_min", number(interval.lower)},
            {"measurable_capacitor_loss_max", number(interval.upper)},
            {"sigma_err_at_grid_min", row.front().sigma_err},
            {"sigma_err_at_grid_max", row.back().sigma_err},
        });
    }
    json summary;
    summary["provenance"] = provenance(Command::ErrorMap, {},
                                       {{"family", by_inductor ? "inductor-loss" : "participation"},
                                        {"fixed_value", spec.fixed_value},
                                        {"grid", {{"lo", spec.grid.lo}, {"hi", spec.grid.hi}, {"points", spec.grid.points}}},
                                        {"threshold", config.threshold}});
    summary["curves"] = std::move(curves);

    Outputs out;
    out.add("error_map.csv", table.str());
    out.add("error_map_summary.json", dump(summary));
    return out;
}

// ---------------------------------------------------------------- synth

synth::GroundTruth default_truth() {
    synth::GroundTruth truth;
    truth.tls.tls_loss_zero = 9.2e-4;
    truth.tls.critical_photon_number = 10.0;
    truth.tls.beta = 0.5;
    truth.tls.high_power_q = 1e6;
    truth.tls.angular_frequency = constants::kTwoPi * 3.7464e9;
    truth.tls.temperature = 0.1;
    truth.coupling_q = 1e4;
    truth.mismatch_phase = 0.05;
    truth.plan.span_linewidths = 12.0;
    truth.plan.points = 401;
    truth.seed = 1;
    return truth;
}

template <typename T>
T value_or(const json& doc, const char* key, T fallback) {
    return doc.contains(key) ? doc.at(key).get<T>() : fallback;
}

Outputs synth_cmd(const RunConfig& config) {
    synth::GroundTruth truth = default_truth();
    std::vector<Input> inputs;
    double n_lo = 1e-2, n_hi = 1e4;
    std::size_t n_count = 25;
    std::vector<double> powers_dbm;
    if (config.inputs.size() > 1) throw Error(ErrorKind::InvalidArgument, "synth takes at most one truth file");
    if (!config.inputs.empty()) {
        inputs.push_back(load(config.inputs.front()));
        try {
            const json doc = json::parse(inputs.back().text);
            truth.tls.angular_frequency = constants::kTwoPi * 1e9 *
                                          value_or(doc, "f0_GHz", truth.tls.angular_frequency / constants::kTwoPi / 1e9);
            truth.tls.tls_loss_zero = value_or(doc, "tls_loss_zero", truth.tls.tls_loss_zero);
            truth.tls.critical_photon_number = value_or(doc, "n_c", truth.tls.critical_photon_number);
            truth.tls.beta = value_or(doc, "beta", truth.tls.beta);
            truth.tls.high_power_q = value_or(doc, "Q_HP", truth.tls.high_power_q);
            truth.tls.temperature = value_or(doc, "T_K", truth.tls.temperature);
            truth.coupling_q = value_or(doc, "Q_c", truth.coupling_q);
            truth.mismatch_phase = value_or(doc, "phi", truth.mismatch_phase);
            truth.plan.span_linewidths = value_or(doc, "span_linewidths", truth.plan.span_linewidths);
            truth.plan.points = value_or(doc, "points", truth.plan.points);
            truth.seed = value_or<std::uint64_t>(doc, "seed", truth.seed);
            if (doc.contains("powers_dbm")) powers_dbm = doc.at("powers_dbm").get<std::vector<double>>();
            if (doc.contains("photon_numbers_over_n_c")) {
                const json& r = doc.at("photon_numbers_over_n_c");
                n_lo = r.at("lo").get<double>();
                n_hi = r.at("hi").get<double>();
                n_count = r.at("count").get<std::size_t>();
            }
            if (doc.contains("noise")) {
                const json& nz = doc.at("noise");
                truth.noise.sigma = value_or(nz, "sigma", 0.0);
                truth.noise.delay = value_or(nz, "delay_s", 0.0);
                truth.noise.baseline = {value_or(nz, "baseline_re", 1.0), value_or(nz, "baseline_im", 0.0)};
                truth.noise.loss_relative_noise = value_or(nz, "loss_relative", 0.0);
            }
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, std::string("truth file: ") + e.what());
        }
    }
    if (config.seed) truth.seed = *config.seed;
    if (config.noise_sigma) truth.noise.sigma = *config.noise_sigma;
    if (config.loss_noise) truth.noise.loss_relative_noise = *config.loss_noise;
    if (config.points) truth.plan.points = *config.points;
    if (powers_dbm.empty()) {
        for (double x : synth::log_space(n_lo, n_hi, n_count)) {
            truth.plan.powers.push_back(
                synth::power_for_photon_number(truth, x * truth.tls.critical_photon_number));
        }
    } else {
        for (double dbm : powers_dbm) truth.plan.powers.push_back(s21::dbm_to_watts(dbm));
    }
    truth.validate();

    Outputs out;
    json files = json::array();
    std::vector<std::future<s21::ComplexSweep>> jobs;
    for (std::size_t i = 0; i < truth.plan.powers.size(); ++i) {
        jobs.push_back(std::async(std::launch::async, [&truth, i] { return synth::generate_s21_sweep(truth, i); }));
    }
    const auto meta = csv_provenance(Command::Synth, inputs);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const s21::ComplexSweep sweep = jobs[i].get();
        auto extra = meta;
        extra["seed"] = std::to_string(synth::mix_seed(truth.seed, i));
        std::array<char, 32> name{};
        std::snprintf(name.data(), name.size(), "sweep_%03zu.csv", i);
        std::string content = io::format_sweep(sweep, extra);
        const synth::OperatingPoint op = synth::operating_point(truth, truth.plan.powers[i]);
        files.push_back({{"file", name.data()},
                         {"sha256", io::sha256_hex(content)},
                         {"power_dbm", s21::watts_to_dbm(truth.plan.powers[i])},
                         {"photon_number", op.photon_number},
                         {"internal_q", op.internal_q}});
        out.add(name.data(), std::move(content));
    }

    io::PowerSweepFile power_sweep;
    power_sweep.resonance_frequency = truth.resonance_frequency();
    power_sweep.temperature = truth.tls.temperature;
    power_sweep.points = synth::generate_power_sweep(truth);
    power_sweep.metadata = meta;
    out.add("power_sweep_truth.csv", io::format_power_sweep(power_sweep));

    json manifest;
    manifest["provenance"] = provenance(Command::Synth, inputs, {{"seed", truth.seed}});
    manifest["truth"] = {
        {"f0_hz", truth.resonance_frequency()},
        {"tls_loss_zero", truth.tls.tls_loss_zero},
        {"critical_photon_number", truth.tls.critical_photon_number},
        {"beta", truth.tls.beta},
        {"high_power_q", truth.tls.high_power_q},
        {"temperature_K", truth.tls.temperature},
        {"coupling_q", truth.coupling_q},
        {"mismatch_phase_rad", truth.mismatch_phase},
        {"span_linewidths", truth.plan.span_linewidths},
        {"points", truth.plan.points},
        {"noise", {{"sigma", truth.noise.sigma},
                   {"delay_s", truth.noise.delay},
                   {"baseline_re", truth.noise.baseline.real()},
                   {"baseline_im", truth.noise.baseline.imag()},
                   {"loss_relative", truth.noise.loss_relative_noise}}},
        {"seed", truth.seed},
        {"rng", "mt19937_64; uniform (x>>11)*2^-53; Box-Muller cos then sin; per-sweep seed splitmix64(seed + (i+1)*0x9E3779B97F4A7C15)"},
    };
    manifest["sweeps"] = std::move(files);
    out.add("manifest.json", dump(manifest));
    return out;
}

Outputs dispatch(const RunConfig& config) {
    switch (config.command) {
        case Command::FitS21: return fit_s21(config);
        case Command::FitTls: return fit_tls(config);
        case Command::Extract: return extract(config);
        case Command::ErrorMap: return error_map(config);
        case Command::Synth: return synth_cmd(config);
    }
    throw Error(ErrorKind::InvalidArgument, "unknown command");
}

}  // namespace

std::string_view to_string(Command command) {
    switch (command) {
        case Command::FitS21: return "fit-s21";
        case Command::FitTls: return "fit-tls";
        case Command::Extract: return "extract";
        case Command::ErrorMap: return "error-map";
        case Command::Synth: return "synth";
    }
    return "unknown";
}

int exit_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::Range:
            return kExitUsage;
        case ErrorKind::Parse:
            return kExitParse;
        case ErrorKind::FitFailure:
        case ErrorKind::OutOfSpan:
        case ErrorKind::IllConditioned:
        case ErrorKind::NonphysicalFit:
        case ErrorKind::Underdetermined:
        case ErrorKind::InsufficientBaseline:
            return kExitFit;
        case ErrorKind::InconsistentInputs:
        case ErrorKind::InfeasibleGeometry:
        case ErrorKind::InvalidModel:
            return kExitInconsistent;
        case ErrorKind::Io:
            return kExitIo;
    }
    return kExitInternal;
}

error_analysis::LogGrid parse_grid(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 3) throw Error(ErrorKind::Range, "grid must be lo:hi:npts");
    try {
        std::size_t used = 0;
        error_analysis::LogGrid grid;
        grid.lo = std::stod(parts[0]);
        grid.hi = std::stod(parts[1]);
        grid.points = std::stoi(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("npts");
        (void)grid.values();
        return grid;
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::Range, "cannot parse grid '" + text + "'");
    }
}

RunOutcome run(const RunConfig& config) {
    RunOutcome outcome;
    json report;
    try {
        const Outputs outputs = dispatch(config);
        for (const auto& [name, content] : outputs.files) {
            const fs::path path = config.output_dir / name;
            io::write_atomic(path, content);
            outcome.written.push_back(path);
        }
        std::error_code ec;
        fs::remove(config.output_dir / "error.json", ec);
        return outcome;
    } catch (const extraction::InconsistentInputs& e) {
        outcome.exit_code = exit_status(e.kind());
        report = {{"kind", std::string(to_string(e.kind()))}, {"stage", e.stage()}, {"message", e.what()}};
    } catch (const Error& e) {
        outcome.exit_code = exit_status(e.kind());
        report = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
    } catch (const fs::filesystem_error& e) {
        outcome.exit_code = kExitIo;
        report = {{"kind", std::string(to_string(ErrorKind::Io))}, {"message", e.what()}};
    } catch (const std::exception& e) {
        outcome.exit_code = kExitInternal;
        report = {{"kind", "internal"}, {"message", e.what()}};
    }
    report["status"] = outcome.exit_code;
    report["command"] = std::string(to_string(config.command));
    report["tool"] = std::string("tlsloss ") + kVersion;
    outcome.error_report = report.dump();
    try {
        io::write_atomic(config.output_dir / "error.json", dump(report));
    } catch (const std::exception&) {
        // output directory unusable; the report is still returned
    }
    return outcome;
}

}  // namespace tlsloss::cli
