#pragma once

// File formats. Delimited files are comma-separated with '#'-prefixed
// "key = value" metadata lines ahead of a single header row. Column names
// carry unit tags (f0_GHz, C_C_fF, ...) converted to SI on ingestion.

#include "tlsloss/circuit_model.hpp"
#include "tlsloss/s21_fit.hpp"
#include "tlsloss/tls_model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tlsloss::io {

/// "%.17g": lossless for IEEE doubles.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a truncated file.
void write_atomic(const std::filesystem::path& path, const std::string& content);

[[nodiscard]] std::string sha256_hex(std::string_view bytes);

/// Parsed delimited table: metadata, header, and raw cells.
struct Table {
    std::map<std::string, std::string> metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const;
};

[[nodiscard]] Table parse_table(const std::string& text);

// Sweep files: frequency_hz,re_s21,im_s21 plus power_dbm and temperature_K
// metadata.
[[nodiscard]] s21::ComplexSweep parse_sweep(const std::string& text);
[[nodiscard]] std::string format_sweep(const s21::ComplexSweep& sweep,
                                       const std::map<std::string, std::string>& extra = {});

struct PowerSweepFile {
    double resonance_frequency = 0.0;  // Hz (stored as f0_GHz)
    double temperature = 0.0;          // K
    bool fractional = false;
    std::vector<tls::PowerSweepPoint> points;
    std::map<std::string, std::string> metadata;  // everything else
};

[[nodiscard]] PowerSweepFile parse_power_sweep(const std::string& text);
[[nodiscard]] std::string format_power_sweep(const PowerSweepFile& file);

struct DeviceTable {
    std::vector<circuit::DeviceRecord> devices;
    /// '#' metadata lines (CSV) or the "metadata" object (JSON).
    std::map<std::string, std::string> metadata;
};

/// Device table as CSV or JSON (array of row objects, or {"devices": [...],
/// "metadata": {...}}). Columns: label, design, material, f0_GHz, N, g_c_um,
/// C_C_fF, C_L_fF, L_nH and optional loss, loss_sigma. Empty cells are
/// allowed.
[[nodiscard]] DeviceTable parse_device_table(const std::string& text);

/// Scale factor to SI for a unit tag such as "GHz", "fF", "nH", "um".
[[nodiscard]] double unit_scale(std::string_view unit);

}  // namespace tlsloss::io
