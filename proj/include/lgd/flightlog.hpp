#pragma once

// Log campaign and on-disk log sets. A campaign flies many missions under
// randomized configurations, keeps the ones the monitor calls correct, and
// the result becomes predictor training data. On disk a log set is a
// directory: manifest.json plus one CSV per retained flight.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lgd/monitor.hpp"
#include "lgd/rng.hpp"

namespace lgd {

struct LogEntry {
    double t = 0;
    StateUnit state;
    SensorUnit sensors;
    int config_id = 0;
};

struct FlightLog {
    int id = 0;
    Configuration config;
    VerdictLabel verdict = VerdictLabel::Correct;
    std::vector<LogEntry> entries;  // empty for discarded flights
};

struct LogSet {
    std::vector<FlightLog> flights;
    size_t total_entries() const {
        size_t n = 0;
        for (const auto& f : flights) n += f.entries.size();
        return n;
    }
};

// One timestep of context: what the craft was doing and what the IMU saw.
struct Context {
    StateUnit state;
    SensorUnit sensors;
};

struct Segment {
    std::vector<Context> contexts;  // h+1 consecutive timesteps, one flight
    int flight_id = 0;
    size_t start_index = 0;
};

struct CampaignFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LogFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LogTruncatedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using ConfigSampler = std::function<Configuration(const ParameterTable&, Rng&)>;

// Default campaign sampler: truncated Gaussian around the defaults, sigma at
// 15% of each range width, clipped into range. Wide enough to show the
// predictor real configuration variety, narrow enough that most flights
// survive the monitor.
inline Configuration sample_campaign_config(const ParameterTable& table, Rng& rng) {
    Configuration cfg(table.size());
    for (size_t i = 0; i < table.size(); ++i) {
        const auto& p = table.at(i);
        double sigma = 0.15 * (p.upper - p.lower);
        cfg[i] = std::clamp(p.def + sigma * rng.normal(0.0, 1.0), p.lower, p.upper);
    }
    return cfg;
}

namespace detail {
inline constexpr std::uint64_t kCampaignConfigStream = 0x434d5043;  // "CMPC"
inline constexpr std::uint64_t kCampaignMissionStream = 0x434d504d;  // "CMPM"
}  // namespace detail

inline std::uint64_t campaign_mission_seed(std::uint64_t seed, int flight_id) {
    return mix_key({seed, detail::kCampaignMissionStream, (std::uint64_t)flight_id});
}

inline std::vector<LogEntry> trace_to_entries(const FlightTrace& trace, int config_id) {
    std::vector<LogEntry> out;
    out.reserve(trace.entries.size());
    for (const auto& te : trace.entries)
        out.push_back(LogEntry{te.t, te.state, te.sensors, config_id});
    return out;
}

// Flies n_flights missions. Flight 0 always carries the exact defaults as a
// calibration gate; the rest draw from `sampler`. Flights the monitor does
// not call correct keep their manifest row (id, config, verdict) but drop
// their entries. Flights are independent, so jobs > 1 splits them across
// threads; per-flight seeding keeps the result identical either way.
inline LogSet generate_campaign(const ParameterTable& table, int n_flights,
                                const Mission& mission, std::uint64_t seed, int jobs = 1,
                                const ConfigSampler& sampler = {}) {
    if (n_flights < 1) throw std::invalid_argument("generate_campaign: n_flights must be >= 1");
    const ConfigSampler& draw =
        sampler ? sampler : ConfigSampler(&sample_campaign_config);

    LogSet ls;
    ls.flights.resize(n_flights);
    auto fly = [&](int id) {
        FlightLog f;
        f.id = id;
        if (id == 0) {
            f.config = default_configuration(table);
        } else {
            Rng rng(mix_key({seed, detail::kCampaignConfigStream, (std::uint64_t)id}));
            f.config = draw(table, rng);
        }
        auto trace = run_mission(table, f.config, mission, campaign_mission_seed(seed, id));
        // no injection here, so prearm state cannot change the label
        f.verdict = classify(trace, PrearmResult{}, false).label;
        if (f.verdict == VerdictLabel::Correct) f.entries = trace_to_entries(trace, id);
        ls.flights[id] = std::move(f);
    };

    if (jobs <= 1) {
        for (int id = 0; id < n_flights; ++id) fly(id);
    } else {
        std::vector<std::thread> pool;
        int workers = std::min(jobs, n_flights);
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int id = w; id < n_flights; id += workers) fly(id);
            });
        for (auto& th : pool) th.join();
    }

    int kept = 0;
    for (const auto& f : ls.flights)
        if (f.verdict == VerdictLabel::Correct) ++kept;
    if (kept * 10 < n_flights)
        throw CampaignFailed("campaign kept " + std::to_string(kept) + " of " +
                             std::to_string(n_flights) +
                             " flights; config sampler looks mis-calibrated");
    return ls;
}

inline constexpr int kLogFormatVersion = 1;
inline constexpr const char* kLogCsvHeader =
    "t,roll,pitch,yaw,roll_rate,pitch_rate,yaw_rate,gx,gy,gz,ax,ay,az";

inline std::string flight_csv_name(int id) {
    return "flight_" + std::to_string(id) + ".csv";
}

inline void write_log(const LogSet& ls, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::ordered_json manifest;
    manifest["format_version"] = kLogFormatVersion;
    manifest["flights"] = nlohmann::ordered_json::array();
    for (const auto& f : ls.flights) {
        nlohmann::ordered_json row;
        row["id"] = f.id;
        row["config"] = f.config;
        row["verdict"] = verdict_name(f.verdict);
        row["n_entries"] = f.entries.size();
        manifest["flights"].push_back(row);
        if (f.entries.empty()) continue;
        std::string csv = kLogCsvHeader;
        csv += '\n';
        for (const auto& e : f.entries) {
            csv += fmt_double(e.t);
            for (double v : {e.state.roll, e.state.pitch, e.state.yaw, e.state.roll_rate,
                             e.state.pitch_rate, e.state.yaw_rate, e.sensors.gx, e.sensors.gy,
                             e.sensors.gz, e.sensors.ax, e.sensors.ay, e.sensors.az}) {
                csv += ',';
                csv += fmt_double(v);
            }
            csv += '\n';
        }
        write_file((fs::path(dir) / flight_csv_name(f.id)).string(), csv);
    }
    write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

inline LogSet read_log(const std::string& dir) {
    namespace fs = std::filesystem;
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file((fs::path(dir) / "manifest.json").string()));
    } catch (const nlohmann::json::parse_error& e) {
        throw LogFormatError(std::string("log manifest is not valid json: ") + e.what());
    }
    if (!manifest.contains("format_version") || !manifest["format_version"].is_number_integer())
        throw LogFormatError("log manifest has no format_version");
    if (manifest["format_version"].get<int>() != kLogFormatVersion)
        throw LogFormatError("log format version " +
                             manifest["format_version"].dump() + " is not supported (want " +
                             std::to_string(kLogFormatVersion) + ")");
    if (!manifest.contains("flights") || !manifest["flights"].is_array())
        throw LogFormatError("log manifest has no flights array");

    LogSet ls;
    size_t config_dims = 0;
    for (const auto& row : manifest["flights"]) {
        FlightLog f;
        f.id = row.at("id").get<int>();
        f.config = row.at("config").get<Configuration>();
        auto label = parse_verdict_label(row.at("verdict").get<std::string>());
        if (!label) throw LogFormatError("unknown verdict in manifest for flight " +
                                         std::to_string(f.id));
        f.verdict = *label;
        if (ls.flights.empty())
            config_dims = f.config.size();
        else if (f.config.size() != config_dims)
            throw LogFormatError("flights disagree on config dimensionality");
        for (const auto& other : ls.flights)
            if (other.id == f.id)
                throw LogFormatError("duplicate flight id " + std::to_string(f.id));

        size_t n_entries = row.at("n_entries").get<size_t>();
        if (n_entries > 0) {
            auto path = (fs::path(dir) / flight_csv_name(f.id)).string();
            auto lines = read_lines(path);
            if (lines.empty() || trim(lines[0]) != kLogCsvHeader)
                throw LogFormatError("bad log header in " + path);
            f.entries.reserve(n_entries);
            for (size_t li = 1; li < lines.size(); ++li) {
                if (trim(lines[li]).empty()) continue;
                auto fields = csv_split(lines[li]);
                if (fields.size() != 13)
                    throw LogFormatError("bad log row in " + path + " line " +
                                         std::to_string(li + 1));
                double v[13];
                for (int k = 0; k < 13; ++k)
                    if (!parse_double(trim(fields[k]), v[k]))
                        throw LogFormatError("unparseable number in " + path + " line " +
                                             std::to_string(li + 1));
                LogEntry e;
                e.t = v[0];
                e.state = {v[1], v[2], v[3], v[4], v[5], v[6]};
                e.sensors = {v[7], v[8], v[9], v[10], v[11], v[12]};
                e.config_id = f.id;
                f.entries.push_back(e);
            }
            if (f.entries.size() != n_entries)
                throw LogTruncatedError(path + " holds " + std::to_string(f.entries.size()) +
                                        " entries, manifest promises " +
                                        std::to_string(n_entries));
            for (size_t i = 1; i < f.entries.size(); ++i)
                if (!(f.entries[i].t > f.entries[i - 1].t))
                    throw LogFormatError("timestamps not strictly increasing in " + path);
        }
        ls.flights.push_back(std::move(f));
    }
    return ls;
}

// Non-overlapping windows of h+1 consecutive contexts per flight, starting
// at indices divisible by h+1; the tail shorter than a window is dropped.
inline std::vector<Segment> segment(const LogSet& ls, int h) {
    if (h < 1) throw std::invalid_argument("segment: h must be >= 1");
    size_t w = (size_t)h + 1;
    std::vector<Segment> out;
    for (const auto& f : ls.flights) {
        for (size_t start = 0; start + w <= f.entries.size(); start += w) {
            Segment s;
            s.flight_id = f.id;
            s.start_index = start;
            s.contexts.reserve(w);
            for (size_t k = 0; k < w; ++k)
                s.contexts.push_back(Context{f.entries[start + k].state,
                                             f.entries[start + k].sensors});
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace lgd
