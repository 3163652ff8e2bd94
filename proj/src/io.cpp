#include "tlsloss/io.hpp"

#include "tlsloss/error.hpp"

#include "json.hpp"
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tlsloss::io {
namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string_view rest(line);
    while (true) {
        const auto comma = rest.find(',');
        out.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return out;
}

double parse_number(const std::string& cell, std::string_view what) {
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || cell.empty()) {
        throw Error(ErrorKind::Parse, "cannot parse " + std::string(what) + " from '" + cell + "'");
    }
    return value;
}

bool parse_bool(const std::string& text) {
    std::string t;
    for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw Error(ErrorKind::Parse, "cannot parse boolean from '" + text + "'");
}

const std::string& required_meta(const Table& table, const std::string& key) {
    const auto it = table.metadata.find(key);
    if (it == table.metadata.end()) throw Error(ErrorKind::Parse, "missing metadata '" + key + "'");
    return it->second;
}

std::size_t required_column(const Table& table, std::string_view name) {
    const auto c = table.column(name);
    if (!c) throw Error(ErrorKind::Parse, "missing column '" + std::string(name) + "'");
    return *c;
}

// Finds "<base>_<unit>" among the given names; returns (index-or-key, scale).
template <typename Names>
std::optional<std::pair<std::string, double>> find_united(const Names& names, std::string_view base) {
    for (const std::string& name : names) {
        if (name.size() > base.size() + 1 && name.compare(0, base.size(), base) == 0 &&
            name[base.size()] == '_') {
            const std::string_view unit = std::string_view(name).substr(base.size() + 1);
            try {
                return std::make_pair(name, unit_scale(unit));
            } catch (const Error&) {
                continue;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::string format_double(double value) {
    std::array<char, 40> buffer{};
    std::snprintf(buffer.data(), buffer.size(), "%.17g", value);
    return buffer.data();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::filesystem::path temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + temp.string());
        out << content;
        out.flush();
        if (!out) throw Error(ErrorKind::Io, "write failed for " + temp.string());
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(temp, ignored);
        throw Error(ErrorKind::Io, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorKind::Io, "SHA-256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

double unit_scale(std::string_view unit) {
    static const std::map<std::string, double, std::less<>> scales = {
        {"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9},
        {"F", 1.0}, {"pF", 1e-12}, {"fF", 1e-15}, {"aF", 1e-18},
        {"H", 1.0}, {"nH", 1e-9}, {"pH", 1e-12},
        {"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9},
        {"K", 1.0}, {"mK", 1e-3},
    };
    const auto it = scales.find(unit);
    if (it == scales.end()) throw Error(ErrorKind::Parse, "unknown unit '" + std::string(unit) + "'");
    return it->second;
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

Table parse_table(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const std::string body = trim(std::string_view(t).substr(1));
            const auto sep = body.find('=');
            if (sep != std::string::npos) {
                table.metadata[trim(std::string_view(body).substr(0, sep))] =
                    trim(std::string_view(body).substr(sep + 1));
            }
            continue;
        }
        auto cells = split(t);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw Error(ErrorKind::Parse, "line " + std::to_string(line_number) + ": expected " +
                                              std::to_string(table.header.size()) + " cells, got " +
                                              std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw Error(ErrorKind::Parse, "table has no header row");
    return table;
}

s21::ComplexSweep parse_sweep(const std::string& text) {
    const Table table = parse_table(text);
    const std::size_t cf = required_column(table, "frequency_hz");
    const std::size_t cr = required_column(table, "re_s21");
    const std::size_t ci = required_column(table, "im_s21");
    const double power_dbm = parse_number(required_meta(table, "power_dbm"), "power_dbm");
    const double temperature = parse_number(required_meta(table, "temperature_K"), "temperature_K");
    std::vector<double> f;
    std::vector<s21::Complex> s;
    for (const auto& row : table.rows) {
        f.push_back(parse_number(row[cf], "frequency_hz"));
        s.emplace_back(parse_number(row[cr], "re_s21"), parse_number(row[ci], "im_s21"));
    }
    try {
        return s21::ComplexSweep(std::move(f), std::move(s), s21::dbm_to_watts(power_dbm), temperature);
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, std::string("invalid sweep: ") + e.what());
    }
}

std::string format_sweep(const s21::ComplexSweep& sweep, const std::map<std::string, std::string>& extra) {
    std::ostringstream out;
    out << "# power_dbm = " << format_double(s21::watts_to_dbm(sweep.power())) << "\n";
    out << "# temperature_K = " << format_double(sweep.temperature()) << "\n";
    for (const auto& [k, v] : extra) out << "# " << k << " = " << v << "\n";
    out << "frequency_hz,re_s21,im_s21\n";
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        out << format_double(sweep.frequencies()[k]) << ',' << format_double(sweep.transmission()[k].real())
            << ',' << format_double(sweep.transmission()[k].imag()) << '\n';
    }
    return out.str();
}

PowerSweepFile parse_power_sweep(const std::string& text) {
    const Table table = parse_table(text);
    PowerSweepFile file;
    file.metadata = table.metadata;
    file.resonance_frequency = parse_number(required_meta(table, "f0_GHz"), "f0_GHz") * 1e9;
    file.temperature = parse_number(required_meta(table, "T_K"), "T_K");
    if (const auto it = table.metadata.find("fractional"); it != table.metadata.end()) {
        file.fractional = parse_bool(it->second);
    }
    file.metadata.erase("f0_GHz");
    file.metadata.erase("T_K");
    file.metadata.erase("fractional");
    const auto cn = table.column("photon_number_or_fraction") ? table.column("photon_number_or_fraction")
                                                              : table.column("photon_number");
    if (!cn) throw Error(ErrorKind::Parse, "missing column 'photon_number_or_fraction'");
    const std::size_t cl = required_column(table, "loss");
    const auto cs = table.column("loss_sigma");
    for (const auto& row : table.rows) {
        tls::PowerSweepPoint p;
        p.photon_number = parse_number(row[*cn], "photon number");
        p.loss = parse_number(row[cl], "loss");
        p.loss_sigma = cs && !row[*cs].empty() ? parse_number(row[*cs], "loss_sigma") : 0.0;
        file.points.push_back(p);
    }
    return file;
}

std::string format_power_sweep(const PowerSweepFile& file) {
    std::ostringstream out;
    out << "# f0_GHz = " << format_double(file.resonance_frequency / 1e9) << "\n";
    out << "# T_K = " << format_double(file.temperature) << "\n";
    out << "# fractional = " << (file.fractional ? "true" : "false") << "\n";
    for (const auto& [k, v] : file.metadata) out << "# " << k << " = " << v << "\n";
    out << "photon_number_or_fraction,loss,loss_sigma\n";
    for (const auto& p : file.points) {
        out << format_double(p.photon_number) << ',' << format_double(p.loss) << ','
            << format_double(p.loss_sigma) << '\n';
    }
    return out.str();
}

namespace {

// Row accessor over either a CSV row or a JSON object, returning an empty
// optional for absent or empty cells.
struct RowView {
    const Table* table = nullptr;
    const std::vector<std::string>* cells = nullptr;
    const nlohmann::json* object = nullptr;

    [[nodiscard]] std::vector<std::string> names() const {
        if (table) return table->header;
        std::vector<std::string> out;
        for (const auto& [k, v] : object->items()) out.push_back(k);
        return out;
    }

    [[nodiscard]] std::optional<std::string> text(const std::string& name) const {
        if (table) {
            const auto c = table->column(name);
            if (!c || (*cells)[*c].empty()) return std::nullopt;
            return (*cells)[*c];
        }
        const auto it = object->find(name);
        if (it == object->end() || it->is_null()) return std::nullopt;
        if (it->is_string()) {
            auto s = it->get<std::string>();
            if (s.empty()) return std::nullopt;
            return s;
        }
        if (it->is_number()) return format_double(it->get<double>());
        throw Error(ErrorKind::Parse, "field '" + name + "' has unsupported type");
    }

    [[nodiscard]] std::optional<double> number(const std::string& name) const {
        const auto t = text(name);
        if (!t) return std::nullopt;
        return parse_number(*t, name);
    }

    [[nodiscard]] std::optional<double> quantity(std::string_view base) const {
        const auto found = find_united(names(), base);
        if (!found) return std::nullopt;
        const auto v = number(found->first);
        if (!v) return std::nullopt;
        return *v * found->second;
    }
};

circuit::DeviceRecord parse_device_row(const RowView& row) {
    circuit::DeviceRecord record;
    const auto label = row.text("label");
    if (!label) throw Error(ErrorKind::Parse, "device row without label");
    record.label = *label;
    const auto design = row.text("design");
    if (!design) throw Error(ErrorKind::Parse, "device " + record.label + ": missing design");
    record.design = circuit::design_kind_from_string(*design);
    record.material = row.text("material").value_or("");
    const auto f0 = row.quantity("f0");
    if (!f0) throw Error(ErrorKind::Parse, "device " + record.label + ": missing f0");
    record.measured_frequency = *f0;
    if (const auto n = row.number("N")) {
        if (*n != std::floor(*n)) throw Error(ErrorKind::Parse, "device " + record.label + ": N must be an integer");
        record.arm_pairs = static_cast<int>(*n);
    }
    record.coupling_gap = row.quantity("g_c");
    const auto cc = row.quantity("C_C");
    const auto cl = row.quantity("C_L");
    const auto l = row.quantity("L");
    const int present = (cc ? 1 : 0) + (cl ? 1 : 0) + (l ? 1 : 0);
    if (present == 3) {
        try {
            record.circuit.emplace(*l, *cc, *cl, record.label);
        } catch (const Error& e) {
            throw Error(ErrorKind::Parse, "device " + record.label + ": " + e.what());
        }
    } else if (present != 0) {
        throw Error(ErrorKind::Parse, "device " + record.label + ": C_C, C_L and L must be given together");
    }
    record.loss = row.number("loss");
    record.loss_sigma = row.number("loss_sigma");
    try {
        record.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Parse, e.what());
    }
    return record;
}

}  // namespace

DeviceTable parse_device_table(const std::string& text) {
    DeviceTable out;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, std::string("device table JSON: ") + e.what());
        }
        if (doc.is_object() && !doc.contains("devices")) {
            throw Error(ErrorKind::Parse, "device table JSON object needs a \"devices\" array");
        }
        const nlohmann::json& rows = doc.is_object() ? doc.at("devices") : doc;
        if (!rows.is_array()) throw Error(ErrorKind::Parse, "device table JSON must be an array");
        for (const auto& obj : rows) {
            if (!obj.is_object()) throw Error(ErrorKind::Parse, "device rows must be objects");
            out.devices.push_back(parse_device_row(RowView{nullptr, nullptr, &obj}));
        }
        if (doc.is_object() && doc.contains("metadata")) {
            for (const auto& [k, v] : doc.at("metadata").items()) {
                out.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
            }
        }
        return out;
    }
    const Table table = parse_table(text);
    out.metadata = table.metadata;
    for (const auto& row : table.rows) out.devices.push_back(parse_device_row(RowView{&table, &row, nullptr}));
    return out;
}

}  // namespace tlsloss::io
