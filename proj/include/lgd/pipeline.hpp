#pragma once

// Stage orchestration behind the CLI. Each stage reads its inputs from a run
// directory, does its work, and leaves artifacts plus an updated manifest
// behind, so any stage can be re-run from disk without re-running the ones
// before it. The manifest pins every artifact to a content hash; a stage that
// finds a mismatched or missing input refuses to run rather than compute on
// stale data.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lgd/flightlog.hpp"
#include "lgd/guideline.hpp"
#include "lgd/search.hpp"

namespace lgd {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kManifestName = "run_manifest.json";

// A stage refusing to run: missing or tampered inputs, or inputs that are
// structurally empty (no segments, no records). Maps to exit code 2.
class StageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string table_hash;                        // of table_to_csv
    std::map<std::string, std::uint64_t> seeds;    // stage -> seed it ran under
    std::map<std::string, std::string> artifacts;  // relative path -> content hash
    std::map<std::string, double> seconds;         // stage -> wall clock
};

namespace detail {

// Stage seed streams, derived from the run seed so stages stay decoupled:
// re-running one with different options never shifts another's draws.
inline constexpr std::uint64_t kTrainStageStream = 0x5054524e;      // "PTRN"
inline constexpr std::uint64_t kSearchStageStream = 0x50535243;     // "PSRC"
inline constexpr std::uint64_t kValidateStageStream = 0x50564c44;   // "PVLD"
inline constexpr std::uint64_t kGuidelineStageStream = 0x5047444c;  // "PGDL"
inline constexpr std::uint64_t kSegmentCapStream = 0x50534353;      // "PSCS"

inline std::string run_path(const std::string& out_dir, const std::string& rel) {
    return (std::filesystem::path(out_dir) / rel).string();
}

class StageTimer {
  public:
    StageTimer() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

  private:
    std::chrono::steady_clock::time_point t0_;
};

inline void record_artifact(RunManifest& m, const std::string& out_dir, const std::string& rel) {
    m.artifacts[rel] = hash_hex(read_file(run_path(out_dir, rel)));
}

inline void require_artifact(const RunManifest& m, const std::string& out_dir,
                             const std::string& rel) {
    auto it = m.artifacts.find(rel);
    if (it == m.artifacts.end())
        throw StageError(rel + " is not in the run manifest; run the stage that produces it");
    std::string content;
    try {
        content = read_file(run_path(out_dir, rel));
    } catch (const std::exception&) {
        throw StageError(rel + " is missing from " + out_dir +
                         "; re-run the stage that produces it");
    }
    if (hash_hex(content) != it->second)
        throw StageError(rel + " does not match the hash in the run manifest; re-run the stage "
                               "that produces it");
}

// Verify every manifest entry under a directory-like prefix ("logs/").
inline void require_artifacts_under(const RunManifest& m, const std::string& out_dir,
                                    const std::string& prefix) {
    bool any = false;
    for (const auto& [rel, hash] : m.artifacts) {
        (void)hash;
        if (rel.rfind(prefix, 0) == 0) {
            require_artifact(m, out_dir, rel);
            any = true;
        }
    }
    if (!any)
        throw StageError("no " + prefix + " artifacts in the run manifest; run the stage that "
                                          "produces them");
}

inline std::string csv_safe(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n') c = ' ';
    }
    return s;
}

}  // namespace detail

inline void save_manifest(const RunManifest& m, const std::string& out_dir) {
    nlohmann::ordered_json j;
    j["tool_version"] = m.tool_version;
    j["table_hash"] = m.table_hash;
    j["seeds"] = m.seeds;
    j["artifacts"] = m.artifacts;
    j["seconds"] = m.seconds;
    write_file(detail::run_path(out_dir, kManifestName), j.dump(2) + "\n");
}

inline RunManifest load_manifest(const std::string& out_dir) {
    std::string path = detail::run_path(out_dir, kManifestName);
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception&) {
        throw StageError("no " + std::string(kManifestName) + " in " + out_dir +
                         "; run genlogs first");
    }
    try {
        auto j = nlohmann::json::parse(text);
        RunManifest m;
        m.tool_version = j.at("tool_version").get<std::string>();
        m.table_hash = j.at("table_hash").get<std::string>();
        m.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
        m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
        m.seconds = j.at("seconds").get<std::map<std::string, double>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw StageError(path + " is not a valid run manifest: " + e.what());
    }
}

// Options shared by every stage. Empty table/mission paths mean the built-in
// parameter table and course.
struct PipelineOptions {
    std::string out_dir = "lgd_out";
    std::string table_path;
    std::string mission_path;
    std::uint64_t seed = 7;
    int jobs = 1;
};

inline ParameterTable resolve_table(const PipelineOptions& o) {
    return o.table_path.empty() ? default_table() : load_param_table(o.table_path);
}

inline Mission resolve_mission(const PipelineOptions& o) {
    return o.mission_path.empty() ? default_mission() : load_mission(o.mission_path);
}

// Load the manifest (or start a fresh one) and pin the parameter table. A run
// directory is married to one table; mixing tables across stages would make
// every downstream artifact quietly wrong.
inline RunManifest open_run(const PipelineOptions& o, const ParameterTable& table) {
    std::filesystem::create_directories(o.out_dir);
    std::string hash = hash_hex(table_to_csv(table));
    if (std::filesystem::exists(detail::run_path(o.out_dir, kManifestName))) {
        RunManifest m = load_manifest(o.out_dir);
        if (m.table_hash != hash)
            throw StageError("parameter table does not match the one recorded in " +
                             std::string(kManifestName));
        m.tool_version = kToolVersion;
        return m;
    }
    RunManifest m;
    m.table_hash = hash;
    return m;
}

// --- genlogs ---------------------------------------------------------------

struct GenlogsOptions {
    int flights = 300;
};

inline void run_genlogs(const PipelineOptions& po, const GenlogsOptions& go = {}) {
    namespace fs = std::filesystem;
    auto table = resolve_table(po);
    auto mission = resolve_mission(po);
    RunManifest m = open_run(po, table);

    detail::StageTimer timer;
    LogSet ls = generate_campaign(table, go.flights, mission, po.seed, po.jobs);

    // a smaller rerun must not leave flights from an earlier campaign behind
    std::string logs_dir = detail::run_path(po.out_dir, "logs");
    fs::remove_all(logs_dir);
    for (auto it = m.artifacts.begin(); it != m.artifacts.end();)
        it = it->first.rfind("logs/", 0) == 0 ? m.artifacts.erase(it) : std::next(it);

    write_log(ls, logs_dir);
    std::vector<std::string> names;
    for (const auto& de : fs::directory_iterator(logs_dir))
        if (de.is_regular_file()) names.push_back(de.path().filename().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) detail::record_artifact(m, po.out_dir, "logs/" + n);

    m.seeds["genlogs"] = po.seed;
    m.seconds["genlogs"] = timer.seconds();
    save_manifest(m, po.out_dir);
}

// --- train -------------------------------------------------------------------

struct TrainOptions {
    PredictorHyperparams hp{};
};

inline void run_train(const PipelineOptions& po, const TrainOptions& to = {}) {
    auto table = resolve_table(po);
    RunManifest m = open_run(po, table);
    detail::require_artifacts_under(m, po.out_dir, "logs/");

    detail::StageTimer timer;
    LogSet ls = read_log(detail::run_path(po.out_dir, "logs"));
    auto ds = extract_features(ls, table, to.hp.h);
    std::uint64_t seed = mix_key({po.seed, detail::kTrainStageStream});
    SurrogateModel model = train(ds, to.hp, seed);
    calibrate_threshold(model, ls);
    save_model(model, detail::run_path(po.out_dir, "model.lgd"));
    detail::record_artifact(m, po.out_dir, "model.lgd");

    m.seeds["train"] = seed;
    m.seconds["train"] = timer.seconds();
    save_manifest(m, po.out_dir);
}

// --- search ------------------------------------------------------------------

struct SearchStageOptions {
    SearchParams params{};
    double bandwidth = 0.0;  // 0: median-distance heuristic on the segments
    int max_segments = 500;  // clustering is quadratic in the segment count
};

inline void run_search_stage(const PipelineOptions& po, const SearchStageOptions& so = {}) {
    if (so.bandwidth < 0)
        throw std::invalid_argument("bandwidth must be positive, or 0 for the heuristic");
    if (so.max_segments < 1) throw std::invalid_argument("max_segments must be at least 1");
    auto table = resolve_table(po);
    RunManifest m = open_run(po, table);
    detail::require_artifacts_under(m, po.out_dir, "logs/");
    detail::require_artifact(m, po.out_dir, "model.lgd");

    detail::StageTimer timer;
    SurrogateModel model = load_model(detail::run_path(po.out_dir, "model.lgd"));
    LogSet ls = read_log(detail::run_path(po.out_dir, "logs"));
    auto segs = segment(ls, model.h);
    if (segs.empty())
        throw StageError("no stable segments in the flight logs; nothing to search");

    if ((int)segs.size() > so.max_segments) {
        // uniform seeded subsample over all windows, original order kept
        std::vector<size_t> idx(segs.size());
        std::iota(idx.begin(), idx.end(), (size_t)0);
        Rng rng(mix_key({po.seed, detail::kSegmentCapStream}));
        for (int k = 0; k < so.max_segments; ++k)
            std::swap(idx[(size_t)k],
                      idx[(size_t)k + (size_t)rng.uniform_int(idx.size() - (size_t)k)]);
        idx.resize((size_t)so.max_segments);
        std::sort(idx.begin(), idx.end());
        std::vector<Segment> kept;
        kept.reserve(idx.size());
        for (size_t i : idx) kept.push_back(std::move(segs[i]));
        segs = std::move(kept);
    }

    std::uint64_t seed = mix_key({po.seed, detail::kSearchStageStream});
    double bw = so.bandwidth > 0 ? so.bandwidth : meanshift_bandwidth(segs, seed);
    auto clusters = meanshift_cluster(segs, bw);
    auto reps = sample_representatives(segs, clusters, so.params.m, seed);
    PotentialSet ps = run_search(model, reps, table, so.params, seed);
    save_potential_set(ps, table, so.params, seed,
                       detail::run_path(po.out_dir, "potential_set.csv"),
                       detail::run_path(po.out_dir, "potential_set_meta.json"));
    detail::record_artifact(m, po.out_dir, "potential_set.csv");
    detail::record_artifact(m, po.out_dir, "potential_set_meta.json");

    m.seeds["search"] = seed;
    m.seconds["search"] = timer.seconds();
    save_manifest(m, po.out_dir);
}

// --- validate ----------------------------------------------------------------

// One validated configuration. Accepted configs fly as-is; rejected ones fly
// the default config and receive the candidate as a mid-flight parameter
// write, probing whether the pre-arm gate was the only thing in the way.
struct ValidationRow {
    int config_id = 0;
    int segment_id = 0;
    double fitness = 0;
    bool prearm_accepted = false;
    std::vector<std::pair<std::string, std::string>> prearm_reasons;  // (parameter, rule id)
    bool injected = false;
    VerdictLabel verdict = VerdictLabel::Correct;
    std::optional<Evidence> evidence;
    Configuration config;
};

inline constexpr const char* kValidationCsvPrefix =
    "config_id,segment_id,fitness,prearm,prearm_reasons,injected,verdict,"
    "ev_begin,ev_end,ev_measured,ev_threshold,ev_detail";

inline std::string validation_csv_header(const ParameterTable& table) {
    std::string h = kValidationCsvPrefix;
    for (size_t i = 0; i < table.size(); ++i) h += "," + table.at(i).name;
    return h;
}

inline std::string validation_rows_to_csv(const ParameterTable& table,
                                          const std::vector<ValidationRow>& rows) {
    std::string out = validation_csv_header(table) + "\n";
    for (const auto& r : rows) {
        require_config_size(table, r.config);
        out += std::to_string(r.config_id) + ',' + std::to_string(r.segment_id) + ',' +
               fmt_double(r.fitness);
        out += r.prearm_accepted ? ",accepted," : ",rejected,";
        for (size_t i = 0; i < r.prearm_reasons.size(); ++i) {
            if (i) out += ';';
            out += r.prearm_reasons[i].first + ':' + r.prearm_reasons[i].second;
        }
        out += r.injected ? ",1," : ",0,";
        out += verdict_name(r.verdict);
        if (r.evidence) {
            out += ',' + fmt_double(r.evidence->t_begin) + ',' + fmt_double(r.evidence->t_end) +
                   ',' + fmt_double(r.evidence->measured) + ',' +
                   fmt_double(r.evidence->threshold) + ',' + detail::csv_safe(r.evidence->detail);
        } else {
            out += ",,,,,";
        }
        for (double v : r.config) out += ',' + fmt_double(v);
        out += '\n';
    }
    return out;
}

inline std::vector<ValidationRow> parse_validation_rows(const ParameterTable& table,
                                                        const std::string& text) {
    auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != validation_csv_header(table))
        throw std::runtime_error("validation record header does not match the parameter table");

    std::vector<ValidationRow> rows;
    for (size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        auto cells = csv_split(lines[r]);
        if (cells.size() != 12 + table.size())
            throw std::runtime_error("validation record row " + std::to_string(r + 1) +
                                     " has the wrong field count");
        auto bad = [&](const char* what) {
            return std::runtime_error("bad " + std::string(what) + " in validation record row " +
                                      std::to_string(r + 1));
        };
        ValidationRow row;
        double d;
        if (!parse_double(cells[0], d) || d != std::floor(d)) throw bad("config id");
        row.config_id = (int)d;
        if (!parse_double(cells[1], d) || d != std::floor(d)) throw bad("segment id");
        row.segment_id = (int)d;
        if (!parse_double(cells[2], row.fitness)) throw bad("fitness");

        auto pre = trim(cells[3]);
        if (pre == "accepted") row.prearm_accepted = true;
        else if (pre == "rejected") row.prearm_accepted = false;
        else throw bad("prearm state");

        for (std::string_view rest = cells[4]; !rest.empty();) {
            size_t semi = rest.find(';');
            std::string_view one = rest.substr(0, semi);
            rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
            size_t colon = one.find(':');
            if (colon == std::string_view::npos) throw bad("prearm reason");
            row.prearm_reasons.emplace_back(std::string(one.substr(0, colon)),
                                            std::string(one.substr(colon + 1)));
        }

        auto inj = trim(cells[5]);
        if (inj == "1") row.injected = true;
        else if (inj == "0") row.injected = false;
        else throw bad("injected flag");

        auto label = parse_verdict_label(trim(cells[6]));
        if (!label) throw bad("verdict");
        row.verdict = *label;

        bool any_ev = false;
        for (int k = 7; k <= 11; ++k)
            if (!trim(cells[(size_t)k]).empty()) any_ev = true;
        if (any_ev) {
            Evidence ev;
            if (!parse_double(cells[7], ev.t_begin)) throw bad("evidence begin");
            if (!parse_double(cells[8], ev.t_end)) throw bad("evidence end");
            if (!parse_double(cells[9], ev.measured)) throw bad("evidence measurement");
            if (!parse_double(cells[10], ev.threshold)) throw bad("evidence threshold");
            ev.detail = std::string(trim(cells[11]));
            row.evidence = std::move(ev);
        }

        row.config.resize(table.size());
        for (size_t i = 0; i < table.size(); ++i)
            if (!parse_double(cells[12 + i], row.config[i])) throw bad("parameter value");
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void save_validation_rows(const ParameterTable& table, const std::vector<ValidationRow>& rows,
                                 const std::string& path) {
    write_file(path, validation_rows_to_csv(table, rows));
}

inline std::vector<ValidationRow> load_validation_rows(const ParameterTable& table,
                                                       const std::string& path) {
    return parse_validation_rows(table, read_file(path));
}

struct ValidateOptions {
    double injection_time = 20.0;  // s; must clear the takeoff window
};

// Fly every candidate and attach a verdict. Results are indexed by position
// in the potential set, so the worker count never changes the output.
inline std::vector<ValidationRow> validate_configs(const ParameterTable& table,
                                                   const Mission& mission, const PotentialSet& ps,
                                                   double injection_time, std::uint64_t seed,
                                                   int jobs = 1) {
    if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    std::vector<ValidationRow> rows(ps.entries.size());
    auto fly = [&](size_t i) {
        const auto& e = ps.entries[i];
        ValidationRow r;
        r.config_id = (int)i;
        r.segment_id = e.segment_id;
        r.fitness = e.fitness;
        r.config = e.config;
        PrearmResult pre = prearm_check(table, e.config);
        r.prearm_accepted = pre.accepted;
        r.prearm_reasons = pre.reasons;
        std::uint64_t mseed = mix_key({seed, (std::uint64_t)i});
        FlightTrace trace;
        if (pre.accepted) {
            trace = run_mission(table, e.config, mission, mseed);
        } else {
            r.injected = true;
            trace = run_mission(table, default_configuration(table), mission, mseed,
                                InjectionPlan{injection_time, e.config});
        }
        Verdict v = classify(trace, pre, r.injected);
        r.verdict = v.label;
        r.evidence = v.evidence;
        rows[i] = std::move(r);
    };

    if (jobs <= 1 || ps.entries.size() < 2) {
        for (size_t i = 0; i < ps.entries.size(); ++i) fly(i);
    } else {
        // a worker can throw (bad injection time); keep the first and rethrow
        std::exception_ptr first_error;
        std::mutex error_mu;
        std::vector<std::thread> pool;
        size_t workers = std::min((size_t)jobs, ps.entries.size());
        for (size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (size_t i = w; i < ps.entries.size(); i += workers) {
                    try {
                        fly(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mu);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return rows;
}

inline void run_validate(const PipelineOptions& po, const ValidateOptions& vo = {}) {
    auto table = resolve_table(po);
    auto mission = resolve_mission(po);
    RunManifest m = open_run(po, table);
    detail::require_artifact(m, po.out_dir, "potential_set.csv");

    detail::StageTimer timer;
    PotentialSet ps = load_potential_set(table, detail::run_path(po.out_dir, "potential_set.csv"));
    std::uint64_t seed = mix_key({po.seed, detail::kValidateStageStream});
    auto rows = validate_configs(table, mission, ps, vo.injection_time, seed, po.jobs);
    save_validation_rows(table, rows, detail::run_path(po.out_dir, "validation_records.csv"));
    detail::record_artifact(m, po.out_dir, "validation_records.csv");

    m.seeds["validate"] = seed;
    m.seconds["validate"] = timer.seconds();
    save_manifest(m, po.out_dir);
}

// --- guideline ---------------------------------------------------------------

struct GuidelineStageOptions {
    MoeaParams moea{};
};

inline std::string scatter_to_csv(const std::vector<RangeGuideline>& front) {
    std::string out = "f2,f1\n";
    for (const auto& g : front) out += fmt_double(g.f2) + ',' + fmt_double(g.f1) + '\n';
    return out;
}

inline void run_guideline(const PipelineOptions& po, const GuidelineStageOptions& go = {}) {
    namespace fs = std::filesystem;
    auto table = resolve_table(po);
    RunManifest m = open_run(po, table);
    detail::require_artifact(m, po.out_dir, "validation_records.csv");

    detail::StageTimer timer;
    auto rows = load_validation_rows(table, detail::run_path(po.out_dir, "validation_records.csv"));
    if (rows.empty())
        throw StageError("no validation records; nothing to estimate guidelines from");
    std::vector<ValidationRecord> records;
    records.reserve(rows.size());
    for (const auto& r : rows) records.push_back({r.config, r.verdict});

    std::uint64_t seed = mix_key({po.seed, detail::kGuidelineStageStream});
    auto front = pareto_optimize(records, table, go.moea, seed);

    // a shorter front must not leave numbered files from an earlier run behind
    auto is_guideline_file = [](const std::string& name) {
        return name.rfind("guideline_", 0) == 0 && name.size() > 14 &&
               name.compare(name.size() - 4, 4, ".csv") == 0;
    };
    for (const auto& de : fs::directory_iterator(po.out_dir))
        if (de.is_regular_file() && is_guideline_file(de.path().filename().string()))
            fs::remove(de.path());
    for (auto it = m.artifacts.begin(); it != m.artifacts.end();)
        it = is_guideline_file(it->first) ? m.artifacts.erase(it) : std::next(it);

    save_front_summary(front, detail::run_path(po.out_dir, "front_summary.csv"));
    detail::record_artifact(m, po.out_dir, "front_summary.csv");
    for (size_t i = 0; i < front.size(); ++i) {
        std::string rel = "guideline_" + std::to_string(i) + ".csv";
        save_guideline(front[i], table, detail::run_path(po.out_dir, rel));
        detail::record_artifact(m, po.out_dir, rel);
    }
    write_file(detail::run_path(po.out_dir, "scatter.csv"), scatter_to_csv(front));
    detail::record_artifact(m, po.out_dir, "scatter.csv");

    m.seeds["guideline"] = seed;
    m.seconds["guideline"] = timer.seconds();
    save_manifest(m, po.out_dir);
}

// --- report ------------------------------------------------------------------

inline std::string report_to_csv(const std::vector<ValidationRow>& rows) {
    constexpr VerdictLabel order[] = {VerdictLabel::Correct,   VerdictLabel::Freeze,
                                      VerdictLabel::Deviation, VerdictLabel::Crash,
                                      VerdictLabel::ThrustLoss, VerdictLabel::Tackling};
    int counts[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& r : rows) ++counts[(int)r.verdict];
    int total = (int)rows.size();
    int incorrect = total - counts[(int)VerdictLabel::Correct];
    std::string out = "metric,value\n";
    for (int k = 0; k < 6; ++k)
        out += std::string(verdict_name(order[k])) + ',' + std::to_string(counts[(int)order[k]]) +
               '\n';
    out += "total," + std::to_string(total) + '\n';
    out += "incorrect," + std::to_string(incorrect) + '\n';
    out += "tp_ratio," + fmt_double(total > 0 ? (double)incorrect / total : 0.0) + '\n';
    return out;
}

// Returns the report text so the CLI can print what it wrote. Timings stay in
// the manifest and on stdout: report files hold nothing wall-clock-dependent,
// which keeps same-seed runs byte-identical on disk.
inline std::string run_report(const PipelineOptions& po) {
    auto table = resolve_table(po);
    RunManifest m = open_run(po, table);
    detail::require_artifact(m, po.out_dir, "validation_records.csv");

    detail::StageTimer timer;
    auto rows = load_validation_rows(table, detail::run_path(po.out_dir, "validation_records.csv"));
    std::string report = report_to_csv(rows);
    write_file(detail::run_path(po.out_dir, "report.csv"), report);
    detail::record_artifact(m, po.out_dir, "report.csv");

    m.seconds["report"] = timer.seconds();
    save_manifest(m, po.out_dir);
    return report;
}

// --- run-all -----------------------------------------------------------------

inline constexpr const char* kStageOrder[] = {"genlogs",  "train",     "search",
                                              "validate", "guideline", "report"};

struct RunAllOptions {
    GenlogsOptions genlogs{};
    TrainOptions train{};
    SearchStageOptions search{};
    ValidateOptions validate{};
    GuidelineStageOptions guideline{};
};

inline std::string run_all(const PipelineOptions& po, const RunAllOptions& ro = {}) {
    run_genlogs(po, ro.genlogs);
    run_train(po, ro.train);
    run_search_stage(po, ro.search);
    run_validate(po, ro.validate);
    run_guideline(po, ro.guideline);
    return run_report(po);
}

}  // namespace lgd
