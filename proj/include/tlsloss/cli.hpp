#pragma once

// Batch front end. Every command reads and validates all of its inputs,
// computes every output in memory, and only then writes files (each one
// atomically). Outputs carry the tool version and SHA-256 digests of the
// inputs, and contain no timestamps, so reruns are byte-identical.

#include "tlsloss/error_analysis.hpp"
#include "tlsloss/tls_model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tlsloss::cli {

enum class Command { FitS21, FitTls, Extract, ErrorMap, Synth };

std::string_view to_string(Command command);

struct RunConfig {
    Command command = Command::Extract;
    std::vector<std::filesystem::path> inputs;
    std::filesystem::path output_dir = ".";

    // fit-tls
    tls::BetaMode beta_mode = tls::BetaMode::Fixed;
    double beta = 0.5;

    // error-map
    double threshold = 0.1;
    error_analysis::CurveFamily family = error_analysis::CurveFamily::InductorLoss;
    std::optional<double> fixed_value;
    std::vector<double> curve_values;
    std::optional<error_analysis::LogGrid> grid;

    // fit-s21
    std::optional<double> delay;
    bool auto_calibrate = false;

    // extract: label -> tls fit result file replacing the tabulated loss
    std::map<std::string, std::filesystem::path> loss_overrides;
    /// Labels for devices A (PPC), B (IDC), C (CPW); chosen by design kind
    /// when empty.
    std::vector<std::string> roles;

    // synth
    std::optional<std::uint64_t> seed;
    std::optional<double> noise_sigma;
    std::optional<double> loss_noise;
    std::optional<std::size_t> points;
};

struct RunOutcome {
    int exit_code = 0;
    std::vector<std::filesystem::path> written;
    /// JSON error report (empty on success).
    std::string error_report;
};

/// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitParse = 3;
inline constexpr int kExitFit = 4;
inline constexpr int kExitInconsistent = 5;
inline constexpr int kExitIo = 6;
inline constexpr int kExitInternal = 1;

[[nodiscard]] int exit_status(ErrorKind kind);

/// Never throws; failures are reported through the outcome and an
/// error.json in the output directory.
[[nodiscard]] RunOutcome run(const RunConfig& config);

/// Parses "lo:hi:npts".
[[nodiscard]] error_analysis::LogGrid parse_grid(const std::string& text);

}  // namespace tlsloss::cli
