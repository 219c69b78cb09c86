#include <catch2/catch_amalgamated.hpp>

#include "lgd/flightlog.hpp"

#include <filesystem>
#include <map>
#include <set>

#include <unistd.h>

using namespace lgd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* tag) {
    auto p = fs::temp_directory_path() /
             ("lgd_flightlog_" + std::string(tag) + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

bool entries_equal(const LogEntry& a, const LogEntry& b) {
    return a.t == b.t && a.config_id == b.config_id &&
           a.state.roll == b.state.roll && a.state.pitch == b.state.pitch &&
           a.state.yaw == b.state.yaw && a.state.roll_rate == b.state.roll_rate &&
           a.state.pitch_rate == b.state.pitch_rate && a.state.yaw_rate == b.state.yaw_rate &&
           a.sensors.gx == b.sensors.gx && a.sensors.gy == b.sensors.gy &&
           a.sensors.gz == b.sensors.gz && a.sensors.ax == b.sensors.ax &&
           a.sensors.ay == b.sensors.ay && a.sensors.az == b.sensors.az;
}

bool logsets_equal(const LogSet& a, const LogSet& b) {
    if (a.flights.size() != b.flights.size()) return false;
    for (size_t i = 0; i < a.flights.size(); ++i) {
        const auto& fa = a.flights[i];
        const auto& fb = b.flights[i];
        if (fa.id != fb.id || fa.verdict != fb.verdict || fa.config != fb.config) return false;
        if (fa.entries.size() != fb.entries.size()) return false;
        for (size_t j = 0; j < fa.entries.size(); ++j)
            if (!entries_equal(fa.entries[j], fb.entries[j])) return false;
    }
    return true;
}

// Small synthetic set with awkward doubles and a discarded flight, for
// exercising the file format without running the simulator.
LogSet tiny_set() {
    auto table = default_table();
    LogSet ls;
    FlightLog a;
    a.id = 0;
    a.config = default_configuration(table);
    a.verdict = VerdictLabel::Correct;
    for (int i = 0; i < 7; ++i) {
        LogEntry e;
        e.t = i * 0.04;
        e.config_id = 0;
        e.state = {-1.25 + i, 0.5 * i, 179.9, -33.3, 0.0, 1e-17};
        e.sensors = {3.0000000001e-7, -2.5, 0.125, 0.1 + i, -9.80665, 42.0};
        a.entries.push_back(e);
    }
    FlightLog b;
    b.id = 1;
    b.config = a.config;
    b.config[0] = 1.75;
    b.verdict = VerdictLabel::Crash;  // discarded: manifest row only, no csv
    FlightLog c;
    c.id = 2;
    c.config = a.config;
    c.verdict = VerdictLabel::Correct;
    for (int i = 0; i < 11; ++i) {
        LogEntry e;
        e.t = 10.0 + i;
        e.config_id = 2;
        e.state = {0, 0, 0, 0, 0, 0};
        e.sensors = {0, 0, 0, 0, 0, -9.80665};
        c.entries.push_back(e);
    }
    ls.flights = {a, b, c};
    return ls;
}

}  // namespace

TEST_CASE("single default flight is retained") {
    auto table = default_table();
    auto ls = generate_campaign(table, 1, default_mission(), 42);
    REQUIRE(ls.flights.size() == 1);
    const auto& f = ls.flights[0];
    CHECK(f.id == 0);
    CHECK(f.config == default_configuration(table));
    CHECK(f.verdict == VerdictLabel::Correct);
    REQUIRE(!f.entries.empty());
    for (size_t i = 1; i < f.entries.size(); ++i)
        REQUIRE(f.entries[i].t > f.entries[i - 1].t);
    for (const auto& e : f.entries) CHECK(e.config_id == 0);
    CHECK(ls.total_entries() == f.entries.size());
}

TEST_CASE("campaign is deterministic and thread-count independent") {
    auto table = default_table();
    auto a = generate_campaign(table, 6, default_mission(), 7);
    auto b = generate_campaign(table, 6, default_mission(), 7);
    CHECK(logsets_equal(a, b));
    auto c = generate_campaign(table, 6, default_mission(), 7, 3);
    CHECK(logsets_equal(a, c));
    auto d = generate_campaign(table, 6, default_mission(), 8);
    CHECK_FALSE(logsets_equal(a, d));
}

TEST_CASE("full-range sampler exercises the discard path") {
    auto table = default_table();
    auto uniform = [](const ParameterTable& t, Rng& rng) { return sample_uniform(t, rng); };
    auto ls = generate_campaign(table, 60, default_mission(), 5, 1, uniform);
    REQUIRE(ls.flights.size() == 60);
    size_t kept = 0, dropped = 0;
    for (const auto& f : ls.flights) {
        if (f.verdict == VerdictLabel::Correct) {
            ++kept;
            CHECK(!f.entries.empty());
        } else {
            ++dropped;
            CHECK(f.entries.empty());
        }
    }
    CHECK(kept >= 1);
    CHECK(dropped >= 1);
    CHECK(kept + dropped == 60);
}

TEST_CASE("retained flights really do classify correct when re-run") {
    auto table = default_table();
    auto ls = generate_campaign(table, 8, default_mission(), 11);
    int rechecked = 0;
    for (const auto& f : ls.flights) {
        if (f.verdict != VerdictLabel::Correct) continue;
        auto trace = run_mission(table, f.config, default_mission(),
                                 campaign_mission_seed(11, f.id));
        CHECK(classify(trace, PrearmResult{}, false).label == VerdictLabel::Correct);
        ++rechecked;
    }
    CHECK(rechecked >= 1);
}

TEST_CASE("hopeless sampler fails the campaign loudly") {
    auto table = default_table();
    auto cfg = default_configuration(table);
    cfg[*table.find("ATC_RAT_RLL_P")] = 0.01;
    cfg[*table.find("ATC_RAT_PIT_P")] = 0.01;
    auto crashy = [cfg](const ParameterTable&, Rng&) { return cfg; };
    CHECK_THROWS_AS(generate_campaign(table, 12, default_mission(), 3, 1, crashy),
                    CampaignFailed);
}

TEST_CASE("log set round-trips exactly through disk") {
    auto dir = fresh_dir("roundtrip");
    auto ls = tiny_set();
    write_log(ls, dir.string());
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "flight_0.csv"));
    CHECK_FALSE(fs::exists(dir / "flight_1.csv"));  // discarded: no data file
    CHECK(fs::exists(dir / "flight_2.csv"));
    auto back = read_log(dir.string());
    CHECK(logsets_equal(ls, back));
    fs::remove_all(dir);
}

TEST_CASE("empty log set is a valid file") {
    auto dir = fresh_dir("empty");
    write_log(LogSet{}, dir.string());
    auto back = read_log(dir.string());
    CHECK(back.flights.empty());
    CHECK(back.total_entries() == 0);
    fs::remove_all(dir);
}

TEST_CASE("format version mismatch and truncation are loud") {
    auto dir = fresh_dir("corrupt");
    write_log(tiny_set(), dir.string());

    auto manifest_path = (dir / "manifest.json").string();
    auto manifest = read_file(manifest_path);
    auto patched = manifest;
    auto at = patched.find("\"format_version\": 1");
    REQUIRE(at != std::string::npos);
    patched.replace(at, 19, "\"format_version\": 9");
    write_file(manifest_path, patched);
    CHECK_THROWS_AS(read_log(dir.string()), LogFormatError);
    write_file(manifest_path, manifest);
    CHECK_NOTHROW(read_log(dir.string()));

    // chop the last row off one flight file
    auto csv_path = (dir / "flight_0.csv").string();
    auto csv = read_file(csv_path);
    auto cut = csv.rfind('\n', csv.size() - 2);
    REQUIRE(cut != std::string::npos);
    write_file(csv_path, csv.substr(0, cut + 1));
    CHECK_THROWS_AS(read_log(dir.string()), LogTruncatedError);

    fs::remove_all(dir);
}

TEST_CASE("non-monotonic timestamps are rejected on read") {
    auto dir = fresh_dir("monotonic");
    auto ls = tiny_set();
    ls.flights[0].entries[3].t = ls.flights[0].entries[2].t;  // stall the clock
    write_log(ls, dir.string());
    CHECK_THROWS_AS(read_log(dir.string()), LogFormatError);
    fs::remove_all(dir);
}

TEST_CASE("segmentation windows are stride h+1 with remainder dropped") {
    auto ls = tiny_set();  // flights of 7, 0, and 11 entries
    auto segs = segment(ls, 4);
    // 7 entries -> 1 window of 5; 11 entries -> 2 windows of 5
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].flight_id == 0);
    CHECK(segs[0].start_index == 0);
    CHECK(segs[1].flight_id == 2);
    CHECK(segs[1].start_index == 0);
    CHECK(segs[2].flight_id == 2);
    CHECK(segs[2].start_index == 5);
    for (const auto& s : segs) REQUIRE(s.contexts.size() == 5);

    // contexts must be verbatim copies of the source entries
    const auto& src = ls.flights[2].entries;
    for (int k = 0; k <= 4; ++k) {
        CHECK(segs[2].contexts[k].state.roll == src[5 + k].state.roll);
        CHECK(segs[2].contexts[k].sensors.az == src[5 + k].sensors.az);
    }

    CHECK_THROWS_AS(segment(ls, 0), std::invalid_argument);

    LogSet shorty;
    FlightLog f;
    f.id = 0;
    f.verdict = VerdictLabel::Correct;
    f.entries.resize(4);
    shorty.flights = {f};
    CHECK(segment(shorty, 4).empty());  // shorter than one window
}

TEST_CASE("segmentation partitions each flight prefix") {
    auto table = default_table();
    auto ls = generate_campaign(table, 2, default_mission(), 13);
    for (int h : {1, 4, 9}) {
        auto segs = segment(ls, h);
        std::map<int, std::set<size_t>> starts;
        for (const auto& s : segs) {
            REQUIRE((int)s.contexts.size() == h + 1);
            CHECK(s.start_index % (h + 1) == 0);
            CHECK(starts[s.flight_id].insert(s.start_index).second);  // disjoint
        }
        for (const auto& f : ls.flights) {
            if (f.entries.empty()) continue;
            size_t expect = f.entries.size() / (h + 1);
            CHECK(starts[f.id].size() == expect);
        }
    }
}
