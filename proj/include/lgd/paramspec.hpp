#ifndef LGD_PARAMSPEC_HPP
#define LGD_PARAMSPEC_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lgd/csvio.hpp"
#include "lgd/rng.hpp"

namespace lgd {

enum class Unit { gain, centidegrees, cm_per_s, cm_per_s2, meters };
enum class ModuleTag { controller, mission, sensor };

inline const char* unit_name(Unit u) {
    switch (u) {
        case Unit::gain: return "gain";
        case Unit::centidegrees: return "centidegrees";
        case Unit::cm_per_s: return "cm_per_s";
        case Unit::cm_per_s2: return "cm_per_s2";
        case Unit::meters: return "meters";
    }
    return "?";
}

inline const char* module_tag_name(ModuleTag m) {
    switch (m) {
        case ModuleTag::controller: return "controller";
        case ModuleTag::mission: return "mission";
        case ModuleTag::sensor: return "sensor";
    }
    return "?";
}

inline std::optional<Unit> unit_from_name(std::string_view s) {
    if (s == "gain") return Unit::gain;
    if (s == "centidegrees") return Unit::centidegrees;
    if (s == "cm_per_s") return Unit::cm_per_s;
    if (s == "cm_per_s2") return Unit::cm_per_s2;
    if (s == "meters") return Unit::meters;
    return std::nullopt;
}

inline std::optional<ModuleTag> module_tag_from_name(std::string_view s) {
    if (s == "controller") return ModuleTag::controller;
    if (s == "mission") return ModuleTag::mission;
    if (s == "sensor") return ModuleTag::sensor;
    return std::nullopt;
}

struct ParameterSpec {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    double def = 0.0;
    Unit unit = Unit::gain;
    ModuleTag module_tag = ModuleTag::controller;
};

// A flight configuration: one value per table row, in table order.
using Configuration = std::vector<double>;

class TableParseError : public std::runtime_error {
public:
    TableParseError(const std::string& msg, std::size_t row)
        : std::runtime_error("parameter table row " + std::to_string(row) + ": " + msg), row_(row) {}
    std::size_t row() const { return row_; }

private:
    std::size_t row_;
};

// Ordered set of tunable parameters. Row order defines the coordinate
// order of every Configuration, feature vector and search space.
class ParameterTable {
public:
    ParameterTable() = default;

    explicit ParameterTable(std::vector<ParameterSpec> specs) {
        for (std::size_t i = 0; i < specs.size(); ++i) validate_and_index(specs[i], i + 1);
        specs_ = std::move(specs);
    }

    std::size_t size() const { return specs_.size(); }
    bool empty() const { return specs_.empty(); }
    const ParameterSpec& at(std::size_t i) const { return specs_.at(i); }
    const std::vector<ParameterSpec>& specs() const { return specs_; }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    void validate_and_index(const ParameterSpec& s, std::size_t row) {
        if (s.name.empty()) throw TableParseError("empty parameter name", row);
        if (!(s.lower < s.upper)) throw TableParseError("lower bound must be strictly below upper for " + s.name, row);
        if (s.def < s.lower || s.def > s.upper)
            throw TableParseError("default outside [lower, upper] for " + s.name, row);
        auto [it, inserted] = index_.emplace(s.name, index_.size());
        if (!inserted) throw TableParseError("duplicate parameter name " + s.name, row);
    }

    std::vector<ParameterSpec> specs_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Header expected in table CSVs; row numbers in errors count the header
// as row 1 so they match what an editor shows.
inline constexpr const char* kTableCsvHeader = "name,lower,upper,default,unit,module_tag";

inline ParameterTable parse_param_table(const std::vector<std::string>& lines) {
    if (lines.empty() || trim(lines[0]) != kTableCsvHeader)
        throw TableParseError("bad or missing header, expected '" + std::string(kTableCsvHeader) + "'", 1);
    std::vector<ParameterSpec> specs;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::size_t row = li + 1;
        if (trim(lines[li]).empty()) continue;
        auto fields = csv_split(lines[li]);
        if (fields.size() != 6) throw TableParseError("expected 6 fields", row);
        ParameterSpec s;
        s.name = std::string(trim(fields[0]));
        if (!parse_double(fields[1], s.lower)) throw TableParseError("bad lower bound '" + fields[1] + "'", row);
        if (!parse_double(fields[2], s.upper)) throw TableParseError("bad upper bound '" + fields[2] + "'", row);
        if (!parse_double(fields[3], s.def)) throw TableParseError("bad default '" + fields[3] + "'", row);
        auto u = unit_from_name(trim(fields[4]));
        if (!u) throw TableParseError("unknown unit '" + fields[4] + "'", row);
        s.unit = *u;
        auto m = module_tag_from_name(trim(fields[5]));
        if (!m) throw TableParseError("unknown module_tag '" + fields[5] + "'", row);
        s.module_tag = *m;
        if (s.name.empty()) throw TableParseError("empty parameter name", row);
        if (!(s.lower < s.upper))
            throw TableParseError("lower bound must be strictly below upper for " + s.name, row);
        if (s.def < s.lower || s.def > s.upper)
            throw TableParseError("default outside [lower, upper] for " + s.name, row);
        for (std::size_t k = 0; k < specs.size(); ++k)
            if (specs[k].name == s.name) throw TableParseError("duplicate parameter name " + s.name, row);
        specs.push_back(std::move(s));
    }
    return ParameterTable(std::move(specs));
}

inline ParameterTable load_param_table(const std::string& path) {
    return parse_param_table(read_lines(path));
}

inline std::string table_to_csv(const ParameterTable& t) {
    std::string out = std::string(kTableCsvHeader) + "\n";
    for (const auto& s : t.specs()) {
        out += s.name;
        out += ',';
        out += fmt_double(s.lower);
        out += ',';
        out += fmt_double(s.upper);
        out += ',';
        out += fmt_double(s.def);
        out += ',';
        out += unit_name(s.unit);
        out += ',';
        out += module_tag_name(s.module_tag);
        out += '\n';
    }
    return out;
}

// The stock table: the twenty tunables exercised in the range study plus
// the three IMU z offsets, so sensor-position effects stay representable.
inline ParameterTable default_table() {
    std::vector<ParameterSpec> s = {
        {"PSC_POSXY_P", 0.5, 2.0, 1.0, Unit::gain, ModuleTag::controller},
        {"PSC_VELXY_P", 0.1, 6.0, 2.0, Unit::gain, ModuleTag::controller},
        {"PSC_POSZ_P", 1.0, 3.0, 1.0, Unit::gain, ModuleTag::controller},
        {"ATC_ANG_RLL_P", 0.0, 12.0, 4.5, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_RLL_I", 0.01, 2.0, 0.135, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_RLL_D", 0.0, 0.05, 0.0036, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_RLL_P", 0.01, 0.5, 0.135, Unit::gain, ModuleTag::controller},
        {"ATC_ANG_PIT_P", 0.0, 12.0, 4.5, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_PIT_P", 0.01, 0.5, 0.135, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_PIT_I", 0.01, 2.0, 0.135, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_PIT_D", 0.0, 0.05, 0.0036, Unit::gain, ModuleTag::controller},
        {"ATC_ANG_YAW_P", 0.0, 6.0, 4.5, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_YAW_P", 0.1, 2.5, 0.18, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_YAW_I", 0.01, 1.0, 0.018, Unit::gain, ModuleTag::controller},
        {"ATC_RAT_YAW_D", 0.0, 0.02, 0.0, Unit::gain, ModuleTag::controller},
        {"WPNAV_SPEED", 20.0, 2000.0, 500.0, Unit::cm_per_s, ModuleTag::mission},
        {"WPNAV_SPEED_DN", 10.0, 500.0, 150.0, Unit::cm_per_s, ModuleTag::mission},
        {"WPNAV_SPEED_UP", 10.0, 1000.0, 250.0, Unit::cm_per_s, ModuleTag::mission},
        {"WPNAV_ACCEL", 50.0, 500.0, 100.0, Unit::cm_per_s2, ModuleTag::mission},
        {"ANGLE_MAX", 1000.0, 8000.0, 4500.0, Unit::centidegrees, ModuleTag::mission},
        {"INS_POS1_Z", -5.0, 5.0, 0.0, Unit::meters, ModuleTag::sensor},
        {"INS_POS2_Z", -5.0, 5.0, 0.0, Unit::meters, ModuleTag::sensor},
        {"INS_POS3_Z", -5.0, 5.0, 0.0, Unit::meters, ModuleTag::sensor},
    };
    return ParameterTable(std::move(s));
}

inline void require_config_size(const ParameterTable& t, const Configuration& c) {
    if (c.size() != t.size())
        throw std::invalid_argument("configuration has " + std::to_string(c.size()) + " values, table has " +
                                    std::to_string(t.size()));
}

inline Configuration default_configuration(const ParameterTable& t) {
    Configuration c(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) c[i] = t.at(i).def;
    return c;
}

inline Configuration sample_uniform(const ParameterTable& t, Rng& rng) {
    Configuration c(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) c[i] = rng.uniform(t.at(i).lower, t.at(i).upper);
    return c;
}

inline Configuration clip_to_range(const ParameterTable& t, Configuration c) {
    require_config_size(t, c);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const auto& s = t.at(i);
        if (c[i] < s.lower) c[i] = s.lower;
        if (c[i] > s.upper) c[i] = s.upper;
    }
    return c;
}

inline std::vector<double> normalize(const ParameterTable& t, const Configuration& c) {
    require_config_size(t, c);
    std::vector<double> n(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& s = t.at(i);
        n[i] = (c[i] - s.lower) / (s.upper - s.lower);
    }
    return n;
}

inline Configuration denormalize(const ParameterTable& t, const std::vector<double>& n) {
    if (n.size() != t.size()) throw std::invalid_argument("normalized vector size mismatch");
    Configuration c(n.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
        const auto& s = t.at(i);
        c[i] = s.lower + n[i] * (s.upper - s.lower);
    }
    return c;
}

// Key for near-duplicate folding: normalized coordinates rounded to
// three decimals. Configs closer than the rounding grid share a key.
inline std::string dedup_key(const ParameterTable& t, const Configuration& c) {
    auto n = normalize(t, c);
    std::string key;
    key.reserve(n.size() * 6);
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (i) key += ':';
        key += std::to_string((long long)std::llround(n[i] * 1000.0));
    }
    return key;
}

// One-config CSV: header row of parameter names, one row of values.
inline std::string configuration_to_csv(const ParameterTable& t, const Configuration& c) {
    require_config_size(t, c);
    std::string head, vals;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) {
            head += ',';
            vals += ',';
        }
        head += t.at(i).name;
        vals += fmt_double(c[i]);
    }
    return head + "\n" + vals + "\n";
}

inline Configuration configuration_from_csv(const ParameterTable& t, const std::vector<std::string>& lines) {
    if (lines.size() < 2) throw std::runtime_error("configuration csv needs a header row and a value row");
    auto names = csv_split(lines[0]);
    if (names.size() != t.size()) throw std::runtime_error("configuration csv column count does not match table");
    for (std::size_t i = 0; i < names.size(); ++i)
        if (std::string(trim(names[i])) != t.at(i).name)
            throw std::runtime_error("configuration csv column " + std::to_string(i + 1) + " is '" + names[i] +
                                     "', table expects '" + t.at(i).name + "'");
    auto vals = csv_split(lines[1]);
    if (vals.size() != t.size()) throw std::runtime_error("configuration csv value count does not match table");
    Configuration c(t.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (!parse_double(vals[i], c[i])) throw std::runtime_error("bad value '" + vals[i] + "' in configuration csv");
    return c;
}

}  // namespace lgd

#endif
