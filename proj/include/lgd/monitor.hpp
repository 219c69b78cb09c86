#pragma once

// Flight trace classification. Four detectors scan a completed trace for the
// observable failure shapes (freeze, course deviation, crash, thrust loss),
// and the pre-arm rule table models the ground-side parameter gate that a
// mid-flight parameter write can bypass. classify() folds all of that into
// the single verdict attached to a validated configuration.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lgd/csvio.hpp"
#include "lgd/paramspec.hpp"
#include "lgd/simkernel.hpp"

namespace lgd {

inline constexpr double kFreezeWindowSec = 15.0;
inline constexpr double kFreezeDisplacement = 0.5;   // m net motion per window
inline constexpr double kDeviationLimit = 1.5;       // m cross track
inline constexpr int kDeviationSamples = 15;         // consecutive 1 Hz samples
inline constexpr double kCrashDescentSpeed = 2.0;    // m/s at ground contact
inline constexpr double kCrashAttitudeDeg = 90.0;
inline constexpr double kCrashAttitudeAlt = 1.0;     // m, tipover ceiling
inline constexpr double kThrustLossSec = 2.0;

struct Evidence {
    double t_begin = 0;
    double t_end = 0;
    double measured = 0;
    double threshold = 0;
    std::string detail;
};

enum class VerdictLabel { Correct, Freeze, Deviation, Crash, ThrustLoss, Tackling };

inline const char* verdict_name(VerdictLabel label) {
    switch (label) {
        case VerdictLabel::Correct: return "correct";
        case VerdictLabel::Freeze: return "freeze";
        case VerdictLabel::Deviation: return "deviation";
        case VerdictLabel::Crash: return "crash";
        case VerdictLabel::ThrustLoss: return "thrust_loss";
        case VerdictLabel::Tackling: return "tackling";
    }
    return "?";
}

inline std::optional<VerdictLabel> parse_verdict_label(std::string_view name) {
    for (auto label : {VerdictLabel::Correct, VerdictLabel::Freeze, VerdictLabel::Deviation,
                       VerdictLabel::Crash, VerdictLabel::ThrustLoss, VerdictLabel::Tackling})
        if (name == verdict_name(label)) return label;
    return std::nullopt;
}

struct Verdict {
    VerdictLabel label = VerdictLabel::Correct;
    std::optional<Evidence> evidence;
};

namespace detail {

// Horizontal distance from the drone to the active leg, clamped to the
// segment so lagging behind A or overrunning B also counts as being off it.
inline double leg_cross_track(const TraceEntry& e) {
    Eigen::Vector2d p(e.pos.x(), e.pos.y());
    Eigen::Vector2d ab = e.leg_b - e.leg_a;
    double len2 = ab.squaredNorm();
    if (len2 < 1e-12) return (p - e.leg_a).norm();
    double s = std::clamp((p - e.leg_a).dot(ab) / len2, 0.0, 1.0);
    return (p - (e.leg_a + s * ab)).norm();
}

}  // namespace detail

// A drone that stops making progress mid-route: some full 15 s window inside
// a contiguous enroute span moves less than 0.5 m horizontally. Takeoff,
// hover and landing legitimately dwell in place and are excluded.
inline std::optional<Evidence> detect_freeze(const FlightTrace& trace) {
    const auto& es = trace.entries;
    size_t n = es.size();
    size_t lo = 0;
    while (lo < n) {
        if (es[lo].phase != Phase::Enroute) {
            ++lo;
            continue;
        }
        size_t hi = lo;
        while (hi + 1 < n && es[hi + 1].phase == Phase::Enroute) ++hi;
        size_t j = lo;
        for (size_t i = lo; i <= hi; ++i) {
            if (j < i) j = i;
            while (j <= hi && es[j].t - es[i].t < kFreezeWindowSec) ++j;
            if (j > hi) break;
            double disp = std::hypot(es[j].pos.x() - es[i].pos.x(),
                                     es[j].pos.y() - es[i].pos.y());
            if (disp < kFreezeDisplacement)
                return Evidence{es[i].t, es[j].t, disp, kFreezeDisplacement,
                                "net horizontal motion over an enroute window"};
        }
        lo = hi + 1;
    }
    return std::nullopt;
}

// Cross-track distance to the active waypoint leg, sampled once per second;
// 15 consecutive bad samples make the deviation persistent rather than a
// corner cut. Samples without an active leg reset the run.
inline std::optional<Evidence> detect_deviation(const FlightTrace& trace) {
    double next_sample = 0;
    int run = 0;
    double run_start = 0, run_end = 0, run_max = 0;
    for (const auto& e : trace.entries) {
        if (e.t + 1e-9 < next_sample) continue;
        next_sample = std::floor(e.t + 1e-9) + 1.0;
        if (!e.leg_valid) {
            run = 0;
            continue;
        }
        double ct = detail::leg_cross_track(e);
        if (ct > kDeviationLimit) {
            if (run == 0) {
                run_start = e.t;
                run_max = 0;
            }
            ++run;
            run_end = e.t;
            run_max = std::max(run_max, ct);
        } else {
            if (run >= kDeviationSamples) break;
            run = 0;
        }
    }
    if (run >= kDeviationSamples)
        return Evidence{run_start, run_end, run_max, kDeviationLimit,
                        "cross track from the active leg at 1 Hz"};
    return std::nullopt;
}

// Ground contact at speed outside the landing phase, or a tipover too low to
// recover. A diverged simulation is also a crash: the state left the regime
// where the numbers mean anything.
inline std::optional<Evidence> detect_crash(const FlightTrace& trace) {
    for (const auto& e : trace.entries) {
        double alt = -e.pos.z();
        if (e.phase != Phase::Land && alt <= 0.0 && e.vel.z() > kCrashDescentSpeed)
            return Evidence{e.t, e.t, e.vel.z(), kCrashDescentSpeed, "ground impact"};
        double tilt = std::max(std::abs(e.state.roll), std::abs(e.state.pitch));
        if (tilt > kCrashAttitudeDeg && alt < kCrashAttitudeAlt)
            return Evidence{e.t, e.t, tilt, kCrashAttitudeDeg,
                            "attitude beyond recovery near ground"};
    }
    if (trace.diverged) {
        double t = trace.entries.empty() ? 0.0 : trace.entries.back().t;
        return Evidence{t, t, 0.0, 0.0, "simulation diverged"};
    }
    return std::nullopt;
}

// All four motors demanded past 100% for two full seconds while the tracking
// error kept growing: the controller is asking for thrust that is not there.
// Brief saturation during aggressive maneuvers recovers and does not count.
inline std::optional<Evidence> detect_thrust_loss(const FlightTrace& trace) {
    const auto& es = trace.entries;
    size_t n = es.size();
    auto saturated = [](const TraceEntry& e) {
        return e.motor_pre.minCoeff() >= 1.0 - 1e-12;
    };
    auto alt_err = [](const TraceEntry& e) { return std::abs(e.alt_target + e.pos.z()); };
    auto att_err = [](const TraceEntry& e) {
        return std::abs(e.state.roll - e.reference.roll) +
               std::abs(e.state.pitch - e.reference.pitch);
    };
    size_t lo = 0;
    while (lo < n) {
        if (!saturated(es[lo])) {
            ++lo;
            continue;
        }
        size_t hi = lo;
        while (hi + 1 < n && saturated(es[hi + 1])) ++hi;
        size_t j = lo;
        for (size_t i = lo; i <= hi; ++i) {
            if (j < i) j = i;
            while (j <= hi && es[j].t - es[i].t < kThrustLossSec) ++j;
            if (j > hi) break;
            if (alt_err(es[j]) > alt_err(es[i]) || att_err(es[j]) > att_err(es[i]))
                return Evidence{es[i].t, es[j].t, es[j].t - es[i].t, kThrustLossSec,
                                "all motors saturated while error grew"};
        }
        lo = hi + 1;
    }
    return std::nullopt;
}

struct PrearmRule {
    std::string parameter;
    double min = -std::numeric_limits<double>::infinity();
    double max = std::numeric_limits<double>::infinity();
    std::string rule_id;
};

// Floors mirroring the stock parameter sanity gate: attitude and rate P
// gains below these values are refused on the ground. The territory below
// them holds real failures (see the monitor tests); everything else in the
// table range is accepted.
inline std::vector<PrearmRule> default_prearm_rules() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {
        {"ATC_ANG_RLL_P", 0.5, inf, "ang_p_floor"},
        {"ATC_ANG_PIT_P", 0.5, inf, "ang_p_floor"},
        {"ATC_ANG_YAW_P", 0.5, inf, "ang_p_floor"},
        {"ATC_RAT_RLL_P", 0.02, inf, "rat_p_floor"},
        {"ATC_RAT_PIT_P", 0.02, inf, "rat_p_floor"},
        {"ATC_RAT_YAW_P", 0.02, inf, "rat_p_floor"},
    };
}

inline constexpr const char* kPrearmRulesCsvHeader = "parameter,min,max,rule_id";

inline std::vector<PrearmRule> parse_prearm_rules(const std::string& text) {
    auto lines = split_lines(text);
    if (lines.empty() || trim(lines[0]) != kPrearmRulesCsvHeader)
        throw TableParseError("pre-arm rules: bad or missing header", 1);
    std::vector<PrearmRule> rules;
    for (size_t li = 1; li < lines.size(); ++li) {
        size_t row = li + 1;
        auto line = trim(lines[li]);
        if (line.empty()) continue;
        auto f = csv_split(line);
        if (f.size() != 4)
            throw TableParseError("pre-arm rules: expected 4 fields", row);
        PrearmRule r;
        r.parameter = trim(f[0]);
        if (r.parameter.empty())
            throw TableParseError("pre-arm rules: empty parameter name", row);
        auto fmin = trim(f[1]);
        auto fmax = trim(f[2]);
        if (!fmin.empty() && !parse_double(fmin, r.min))
            throw TableParseError("pre-arm rules: bad min", row);
        if (!fmax.empty() && !parse_double(fmax, r.max))
            throw TableParseError("pre-arm rules: bad max", row);
        if (r.min > r.max)
            throw TableParseError("pre-arm rules: min exceeds max", row);
        r.rule_id = trim(f[3]);
        if (r.rule_id.empty())
            throw TableParseError("pre-arm rules: empty rule id", row);
        rules.push_back(std::move(r));
    }
    return rules;
}

inline std::string prearm_rules_to_csv(const std::vector<PrearmRule>& rules) {
    std::string out = kPrearmRulesCsvHeader;
    out += '\n';
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (const auto& r : rules) {
        out += r.parameter;
        out += ',';
        if (r.min != -inf) out += fmt_double(r.min);
        out += ',';
        if (r.max != inf) out += fmt_double(r.max);
        out += ',';
        out += r.rule_id;
        out += '\n';
    }
    return out;
}

inline std::vector<PrearmRule> load_prearm_rules(const std::string& path) {
    return parse_prearm_rules(read_file(path));
}

struct PrearmResult {
    bool accepted = true;
    std::vector<std::pair<std::string, std::string>> reasons;  // (parameter, rule id)
};

inline PrearmResult prearm_check(const ParameterTable& table, const Configuration& config,
                                 const std::vector<PrearmRule>& rules = default_prearm_rules()) {
    require_config_size(table, config);
    PrearmResult res;
    for (const auto& r : rules) {
        auto idx = table.find(r.parameter);
        if (!idx)
            throw std::invalid_argument("pre-arm rule references unknown parameter: " +
                                        r.parameter);
        double v = config[*idx];
        if (v < r.min || v > r.max) res.reasons.emplace_back(r.parameter, r.rule_id);
    }
    res.accepted = res.reasons.empty();
    return res;
}

// One label per run. A mid-flight injection of a config the prearm gate had
// refused, followed by any detected instability, is the tackling case: the
// gate knew, the radio link did not ask. Otherwise the most severe firing
// detector names the verdict.
inline Verdict classify(const FlightTrace& trace, const PrearmResult& prearm, bool injected) {
    struct Hit {
        VerdictLabel label;
        std::optional<Evidence> ev;
    };
    Hit hits[] = {
        {VerdictLabel::Crash, detect_crash(trace)},
        {VerdictLabel::ThrustLoss, detect_thrust_loss(trace)},
        {VerdictLabel::Deviation, detect_deviation(trace)},
        {VerdictLabel::Freeze, detect_freeze(trace)},
    };
    for (auto& h : hits) {
        if (!h.ev) continue;
        if (!prearm.accepted && injected) return {VerdictLabel::Tackling, std::move(h.ev)};
        return {h.label, std::move(h.ev)};
    }
    return {VerdictLabel::Correct, std::nullopt};
}

}  // namespace lgd
