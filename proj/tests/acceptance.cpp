// Acceptance checks, one line per criterion. Each check is self-contained,
// pins its own tolerances, and prints pass/fail plus elapsed wall time; the
// process exits nonzero if any criterion fails. Run a subset by listing
// criterion numbers as arguments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "lgd/pipeline.hpp"

using namespace lgd;
namespace fs = std::filesystem;

namespace {

struct CheckResult {
    bool pass = false;
    std::string note;
};

fs::path scratch_dir(const char* tag) {
    auto p = fs::temp_directory_path() /
             ("lgd_acceptance_" + std::string(tag) + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// --- criterion 1: analytic gradients vs central finite differences ----------

CheckResult check_gradients() {
    const double step = 1e-5;
    const double tol = 1e-4;
    long total = 0, good = 0;
    for (int m = 0; m < 20; ++m) {
        lstm::Dims dims{7 + m % 4, 3 + m % 3};
        int h = 1 + m % 4;
        int bsz = 2 + m % 3;
        Rng rng((std::uint64_t)(100 + m));
        Eigen::VectorXd params = lstm::init_params(dims, rng);

        lstm::Batch batch;
        batch.x.resize((size_t)h);
        for (int t = 0; t < h; ++t) {
            batch.x[(size_t)t].resize(dims.input, bsz);
            for (int i = 0; i < dims.input; ++i)
                for (int b = 0; b < bsz; ++b) batch.x[(size_t)t](i, b) = rng.normal(0.0, 0.5);
        }
        batch.target.resize(6, bsz);
        for (int i = 0; i < 6; ++i)
            for (int b = 0; b < bsz; ++b) batch.target(i, b) = rng.normal(0.0, 0.5);

        Eigen::VectorXd grad;
        lstm::loss_and_grad(params, dims, batch, grad);
        for (int i = 0; i < params.size(); ++i) {
            Eigen::VectorXd p = params;
            p[i] += step;
            double lp = lstm::loss(p, dims, batch);
            p[i] -= 2 * step;
            double lm = lstm::loss(p, dims, batch);
            double numeric = (lp - lm) / (2 * step);
            double rel = std::abs(grad[i] - numeric) /
                         std::max(std::abs(grad[i]) + std::abs(numeric), 1e-4);
            ++total;
            if (rel <= tol) ++good;
        }
    }
    double frac = (double)good / (double)total;
    return {frac >= 0.99, std::to_string(good) + "/" + std::to_string(total) + " within 1e-4"};
}

// --- criterion 2: surrogate learns synthetic linear dynamics ----------------

// a_{t+1} = 0.9 a_t + bias(config): six state channels decay toward a
// config-dependent fixed point. Held out whole flights, default training.
CheckResult check_learnability() {
    ParameterTable table({
        {"BIAS_A", -0.5, 0.5, 0.0, Unit::gain, ModuleTag::controller},
        {"BIAS_B", -0.5, 0.5, 0.0, Unit::gain, ModuleTag::controller},
    });
    const double mix[6][2] = {{1.0, 0.0},  {0.0, 1.0},  {0.5, 0.5},
                              {-1.0, 0.5}, {0.5, -1.0}, {-0.5, -0.5}};
    LogSet ls;
    Rng rng(424242);
    for (int id = 0; id < 50; ++id) {
        FlightLog f;
        f.id = id;
        f.verdict = VerdictLabel::Correct;
        f.config = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        double a[6];
        for (double& v : a) v = rng.uniform(-1.0, 1.0);
        for (int t = 0; t < 140; ++t) {
            LogEntry e;
            e.t = 0.04 * t;
            e.config_id = id;
            e.state = {a[0], a[1], a[2], a[3], a[4], a[5]};
            e.sensors = {a[3], a[4], a[5], 0.5 * a[0], 0.5 * a[1], 0.5 * a[2]};
            f.entries.push_back(e);
            for (int j = 0; j < 6; ++j)
                a[j] = 0.9 * a[j] + mix[j][0] * f.config[0] + mix[j][1] * f.config[1];
        }
        ls.flights.push_back(std::move(f));
    }

    PredictorHyperparams hp;  // defaults on purpose
    auto ds = extract_features(ls, table, hp.h);
    SurrogateModel model = train(ds, hp, 2024);
    return {model.final_val_mse < 1e-3, "held-out mse " + fmt3(model.final_val_mse)};
}

// --- criterion 3: surrogate deviation separates destabilizing configs -------

CheckResult check_separation() {
    auto table = default_table();
    auto mission = default_mission();
    auto set = [&](Configuration& c, const char* n, double v) { c[*table.find(n)] = v; };

    LogSet ls = generate_campaign(table, 100, mission, 42);

    // thirty scripted destabilizing configs: the three families the plant
    // verifiably cannot fly (low rate P crashes, attitude P at the pre-arm
    // floor deviates, minimal position gains freeze), ten of each with jitter
    std::vector<Configuration> destab;
    Rng jit(871);
    for (int i = 0; i < 10; ++i) {
        auto c = default_configuration(table);
        set(c, "ATC_RAT_RLL_P", 0.01 + jit.uniform(0.0, 0.002));
        set(c, "ATC_RAT_PIT_P", 0.01 + jit.uniform(0.0, 0.002));
        destab.push_back(c);
    }
    for (int i = 0; i < 10; ++i) {
        auto c = default_configuration(table);
        set(c, "ATC_ANG_RLL_P", 0.5 + jit.uniform(0.0, 0.05));
        set(c, "ATC_ANG_PIT_P", 0.5 + jit.uniform(0.0, 0.05));
        destab.push_back(c);
    }
    for (int i = 0; i < 10; ++i) {
        auto c = default_configuration(table);
        set(c, "PSC_POSXY_P", 0.5 + jit.uniform(0.0, 0.05));
        set(c, "PSC_VELXY_P", 0.1 + jit.uniform(0.0, 0.05));
        destab.push_back(c);
    }

    // thirty stable configs: flown by the campaign and labeled correct
    std::vector<Configuration> stable;
    for (const auto& f : ls.flights) {
        if (f.verdict != VerdictLabel::Correct) continue;
        stable.push_back(f.config);
        if (stable.size() == 30) break;
    }
    if (stable.size() < 30) return {false, "campaign kept under 30 flights"};

    PredictorHyperparams hp;
    hp.hidden_size = 32;
    hp.epochs = 6;
    hp.batch_size = 256;
    auto ds = extract_features(ls, table, hp.h);

    auto segs = segment(ls, hp.h);
    std::vector<Segment> eval_segs;
    Rng pick(5150);
    for (int k = 0; k < 40 && k < (int)segs.size(); ++k) {
        size_t j = (size_t)k + (size_t)pick.uniform_int(segs.size() - (size_t)k);
        std::swap(segs[(size_t)k], segs[j]);
        eval_segs.push_back(segs[(size_t)k]);
    }

    auto mean_dev = [&](const SurrogateModel& model, const std::vector<Configuration>& cfgs) {
        double sum = 0;
        for (const auto& seg : eval_segs) {
            auto devs = deviation_batch(model, seg, cfgs);
            for (double d : devs) sum += d;
        }
        return sum / ((double)eval_segs.size() * (double)cfgs.size());
    };

    std::string note;
    bool pass = true;
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        SurrogateModel model = train(ds, hp, seed);
        double d_incorrect = mean_dev(model, destab);
        double d_stable = mean_dev(model, stable);
        double ratio = d_incorrect / d_stable;
        if (!(ratio >= 1.2)) pass = false;
        if (!note.empty()) note += ", ";
        note += "ratio " + fmt3(ratio);
    }
    return {pass, note + " (bar 1.2)"};
}

// --- criterion 4: differential evolution solves the sphere ------------------

CheckResult check_de_sphere() {
    SearchParams p;
    p.NP = 100;
    p.F = 0.4;
    p.CR = 0.9;
    p.G_max = 200;
    p.stagnation_eps = 0.0;  // run the full budget; the plateau detector
                             // would stop well short of the 1e-2 bar
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng tr(mix_key({seed, 0x41434334}));  // "ACC4"
        Configuration target(6);
        for (double& v : target) v = 0.5 + tr.uniform(-0.05, 0.05);
        BatchFitness sphere = [&](const std::vector<Configuration>& cfgs) {
            std::vector<double> out(cfgs.size());
            for (size_t i = 0; i < cfgs.size(); ++i) {
                double s = 0;
                for (size_t j = 0; j < 6; ++j) {
                    double d = cfgs[i][j] - target[j];
                    s += d * d;
                }
                out[i] = -s;
            }
            return out;
        };
        Configuration start(6, 0.5);
        auto res = search_core(sphere, start, p, seed);
        double d2 = 0;
        for (size_t j = 0; j < 6; ++j) {
            double d = res.top[0].config[j] - target[j];
            d2 += d * d;
        }
        if (std::sqrt(d2) <= 1e-2) ++ok;
    }
    return {ok >= 95, std::to_string(ok) + "/100 within 1e-2"};
}

// --- criterion 5: Pareto front equals brute force on enumerable grids -------

CheckResult check_pareto_exact() {
    ParameterTable table({
        {"alpha", 0.0, 10.0, 5.0, Unit::gain, ModuleTag::controller},
        {"beta", -2.0, 2.0, 0.0, Unit::gain, ModuleTag::controller},
    });
    auto grid_value = [&](const ParameterSpec& s, int g) {
        if (g == 0) return s.lower;
        if (g == 10) return s.upper;
        return s.lower + (g / 10.0) * (s.upper - s.lower);
    };

    int exact = 0;
    for (int inst = 0; inst < 5; ++inst) {
        std::vector<ValidationRecord> records;
        Rng rng((std::uint64_t)(777 + inst));
        for (int i = 0; i < 40; ++i) {
            Configuration c = sample_uniform(table, rng);
            records.push_back(
                {c, rng.uniform() < 0.35 ? VerdictLabel::Crash : VerdictLabel::Correct});
        }

        // brute force every box with bound ends on the 11-point grid
        std::vector<std::pair<double, int>> pts;
        for (int a0 = 0; a0 < 11; ++a0)
            for (int b0 = a0 + 1; b0 < 11; ++b0)
                for (int a1 = 0; a1 < 11; ++a1)
                    for (int b1 = a1 + 1; b1 < 11; ++b1) {
                        RangeBox box{{grid_value(table.at(0), a0), grid_value(table.at(1), a1)},
                                     {grid_value(table.at(0), b0), grid_value(table.at(1), b1)}};
                        pts.push_back(objectives(box, records));
                    }
        std::set<std::pair<double, int>> expected;
        for (const auto& p : pts) {
            bool dominated = false;
            for (const auto& q : pts)
                if ((q.first <= p.first && q.second >= p.second) &&
                    (q.first < p.first || q.second > p.second)) {
                    dominated = true;
                    break;
                }
            if (!dominated) expected.insert(p);
        }

        MoeaParams mp;
        mp.grid_points = 11;
        auto front = pareto_optimize(records, table, mp, (std::uint64_t)(1000 + inst));
        std::set<std::pair<double, int>> got;
        for (const auto& g : front) got.insert({g.f1, g.f2});
        if (got == expected) ++exact;
    }
    return {exact == 5, std::to_string(exact) + "/5 instances exact"};
}

// --- criterion 6: monitor fixtures get exactly the intended verdicts --------

// Hand-built traces with piecewise constant velocity, so each detector sees
// exactly the scripted motion.
struct Craft {
    FlightTrace tr;
    double dt = 0.2;
    double t = 0;
    Phase phase = Phase::Enroute;
    Eigen::Vector3d pos{0, 0, -10};
    Eigen::Vector3d vel = Eigen::Vector3d::Zero();
    double roll = 0;
    double motor = 0.5;

    void run(double seconds) {
        int n = (int)std::llround(seconds / dt);
        for (int i = 0; i < n; ++i) {
            TraceEntry e;
            e.t = t;
            e.state.roll = roll;
            e.pos = pos;
            e.vel = vel;
            e.motor_pre = Eigen::Vector4d::Constant(motor);
            e.motor_post = e.motor_pre.cwiseMax(0.0).cwiseMin(1.0);
            e.phase = phase;
            e.alt_target = 10;
            e.leg_valid = true;
            e.leg_a = Eigen::Vector2d(0, 0);
            e.leg_b = Eigen::Vector2d(200, 0);
            tr.entries.push_back(e);
            t += dt;
            pos += vel * dt;
        }
    }
};

CheckResult check_monitor_fixtures() {
    struct Fixture {
        const char* name;
        FlightTrace trace;
        VerdictLabel want;
    };
    std::vector<Fixture> fixtures;

    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 0);
        c.run(40);
        fixtures.push_back({"steady cruise", c.tr, VerdictLabel::Correct});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(0.04, 0, 0);  // 0.6 m per 15 s window
        c.run(40);
        fixtures.push_back({"slow but moving", c.tr, VerdictLabel::Correct});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(0.02, 0, 0);  // 0.3 m per window
        c.run(40);
        fixtures.push_back({"creeping freeze", c.tr, VerdictLabel::Freeze});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 0);
        c.run(5);
        c.vel.setZero();
        c.run(20);
        fixtures.push_back({"dead stop", c.tr, VerdictLabel::Freeze});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 0);
        c.run(3);
        c.pos.y() = 2.0;
        c.run(17);
        c.pos.y() = 0.1;
        c.run(5);
        fixtures.push_back({"offset hold", c.tr, VerdictLabel::Deviation});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 1.0, 0);  // drifts off the leg and stays off
        c.run(30);
        fixtures.push_back({"steady drift", c.tr, VerdictLabel::Deviation});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 5);  // descends through the ground
        c.run(2.3);
        fixtures.push_back({"midair impact", c.tr, VerdictLabel::Crash});
    }
    {
        Craft c;
        c.pos.z() = -0.5;
        c.roll = 120;
        c.run(1.0);
        fixtures.push_back({"tipped over low", c.tr, VerdictLabel::Crash});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 0);
        c.run(8);
        c.motor = 1.3;
        c.vel.z() = 2.0;  // saturated and sinking against a 10 m target
        c.run(3);
        c.motor = 0.5;
        c.vel.z() = 0;
        c.run(9);
        fixtures.push_back({"saturated sink", c.tr, VerdictLabel::ThrustLoss});
    }
    {
        Craft c;
        c.vel = Eigen::Vector3d(2, 0, 0);
        c.run(4);
        c.motor = 1.5;
        c.vel.z() = 1.0;
        c.run(4);
        c.motor = 0.5;
        c.vel.z() = 0;
        c.run(10);
        fixtures.push_back({"hard saturation", c.tr, VerdictLabel::ThrustLoss});
    }

    PrearmResult ok_pre;
    int checked = 0;
    for (const auto& f : fixtures) {
        auto got = classify(f.trace, ok_pre, false);
        if (got.label != f.want)
            return {false, std::string(f.name) + " got " + verdict_name(got.label) + ", wanted " +
                               verdict_name(f.want)};
        if ((got.label != VerdictLabel::Correct) != got.evidence.has_value())
            return {false, std::string(f.name) + " evidence presence wrong"};

        // each detector fires on its own fixtures and nobody else's
        bool freeze = detect_freeze(f.trace).has_value();
        bool dev = detect_deviation(f.trace).has_value();
        bool crash = detect_crash(f.trace).has_value();
        bool thrust = detect_thrust_loss(f.trace).has_value();
        if (freeze != (f.want == VerdictLabel::Freeze))
            return {false, std::string(f.name) + " freeze detector wrong"};
        if (dev != (f.want == VerdictLabel::Deviation))
            return {false, std::string(f.name) + " deviation detector wrong"};
        if (crash != (f.want == VerdictLabel::Crash))
            return {false, std::string(f.name) + " crash detector wrong"};
        if (thrust != (f.want == VerdictLabel::ThrustLoss))
            return {false, std::string(f.name) + " thrust detector wrong"};
        ++checked;
    }

    // the tackling class: an unstable flight after injecting a config the
    // pre-arm gate had refused
    PrearmResult refused;
    refused.accepted = false;
    refused.reasons = {{"ATC_RAT_RLL_P", "rat_p_floor"}};
    Craft c;
    c.vel = Eigen::Vector3d(2, 0, 5);
    c.run(2.3);
    auto got = classify(c.tr, refused, true);
    ++checked;
    if (got.label != VerdictLabel::Tackling)
        return {false, std::string("tackling fixture got ") + verdict_name(got.label)};

    return {true, std::to_string(checked) + " fixtures, all exact"};
}

// --- criterion 7: pre-arm rejection does not stop a mid-flight write --------

CheckResult check_tackling() {
    auto table = default_table();
    auto mission = default_mission();
    auto bad = default_configuration(table);
    bad[*table.find("ATC_RAT_RLL_P")] = 0.01;
    bad[*table.find("ATC_RAT_PIT_P")] = 0.01;

    auto pre = prearm_check(table, bad);
    if (pre.accepted) return {false, "pre-arm accepted the scripted config"};

    auto trace = run_mission(table, default_configuration(table), mission, 31337,
                             InjectionPlan{20.0, bad});
    auto verdict = classify(trace, pre, true);
    if (verdict.label != VerdictLabel::Tackling)
        return {false, std::string("verdict ") + verdict_name(verdict.label)};
    return {true, "rejected at pre-arm, unstable after injection"};
}

// --- criterion 8 and 10: end-to-end precision and determinism ---------------

double incorrect_fraction(const std::string& out_dir) {
    auto table = default_table();
    auto rows = load_validation_rows(table, detail::run_path(out_dir, "validation_records.csv"));
    if (rows.empty()) return 0.0;
    int incorrect = 0;
    for (const auto& r : rows)
        if (r.verdict != VerdictLabel::Correct) ++incorrect;
    return (double)incorrect / (double)rows.size();
}

CheckResult check_end_to_end(std::map<std::uint64_t, std::string>& run_dirs) {
    int jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string note;
    bool pass = true;
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        PipelineOptions po;
        po.out_dir = scratch_dir(("e2e_" + std::to_string(seed)).c_str()).string();
        po.seed = seed;
        po.jobs = jobs;
        run_all(po);
        run_dirs[seed] = po.out_dir;
        double frac = incorrect_fraction(po.out_dir);
        if (!(frac >= 0.5)) pass = false;
        if (!note.empty()) note += ", ";
        note += "seed " + std::to_string(seed) + ": " + fmt3(100 * frac) + "% incorrect";
    }
    return {pass, note + " (bar 50%)"};
}

CheckResult check_determinism(const std::map<std::uint64_t, std::string>& run_dirs) {
    auto it = run_dirs.find(7);
    if (it == run_dirs.end()) return {false, "criterion 8 run unavailable"};

    PipelineOptions po;
    po.out_dir = scratch_dir("repeat_7").string();
    po.seed = 7;
    po.jobs = std::max(1u, std::thread::hardware_concurrency());
    run_all(po);

    auto list_files = [](const std::string& root) {
        std::vector<std::string> rel;
        for (const auto& de : fs::recursive_directory_iterator(root))
            if (de.is_regular_file())
                rel.push_back(fs::relative(de.path(), root).generic_string());
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    auto a = list_files(it->second);
    auto b = list_files(po.out_dir);
    if (a != b) return {false, "file sets differ"};
    int compared = 0;
    for (const auto& rel : a) {
        if (rel == kManifestName) continue;  // stores wall-clock timings
        if (read_file(detail::run_path(it->second, rel)) !=
            read_file(detail::run_path(po.out_dir, rel)))
            return {false, rel + " differs between same-seed runs"};
        ++compared;
    }
    return {true, std::to_string(compared) + " files byte-identical"};
}

// --- criterion 9: meanshift recovers well-separated blobs -------------------

CheckResult check_meanshift_blobs() {
    int pass_seeds = 0;
    std::string fail_note;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(mix_key({seed, 0x41434339}));  // "ACC9"
        const double centers[3][3] = {{0, 0, 0}, {10, 0, 0}, {0, 10, 0}};
        std::vector<Segment> segs;
        std::vector<int> truth;
        for (int blob = 0; blob < 3; ++blob)
            for (int i = 0; i < 30; ++i) {
                Segment s;
                s.flight_id = blob;
                s.start_index = (size_t)i;
                for (int ctx = 0; ctx < 2; ++ctx) {
                    Context c{};
                    c.state.roll = centers[blob][0] + rng.normal(0.0, 0.3);
                    c.state.pitch = centers[blob][1] + rng.normal(0.0, 0.3);
                    c.state.yaw = centers[blob][2] + rng.normal(0.0, 0.3);
                    s.contexts.push_back(c);
                }
                segs.push_back(std::move(s));
                truth.push_back(blob);
            }

        // separation is defined in the embedded space the clusterer sees
        auto emb = detail::embed_segments(segs);
        double min_sep = 1e300;
        for (int p = 0; p < 3; ++p)
            for (int q = p + 1; q < 3; ++q) {
                std::vector<double> mp(emb[0].size(), 0.0), mq(emb[0].size(), 0.0);
                int np = 0, nq = 0;
                for (size_t i = 0; i < segs.size(); ++i) {
                    if (truth[i] == p) {
                        for (size_t d = 0; d < mp.size(); ++d) mp[d] += emb[i][d];
                        ++np;
                    }
                    if (truth[i] == q) {
                        for (size_t d = 0; d < mq.size(); ++d) mq[d] += emb[i][d];
                        ++nq;
                    }
                }
                double s = 0;
                for (size_t d = 0; d < mp.size(); ++d) {
                    double diff = mp[d] / np - mq[d] / nq;
                    s += diff * diff;
                }
                min_sep = std::min(min_sep, std::sqrt(s));
            }
        double bandwidth = min_sep / 10.0;

        auto clusters = meanshift_cluster(segs, bandwidth);
        if (clusters.size() != 3) {
            fail_note = "seed " + std::to_string(seed) + ": " +
                        std::to_string(clusters.size()) + " clusters";
            continue;
        }
        int majority_sum = 0;
        for (const auto& cl : clusters) {
            int count[3] = {0, 0, 0};
            for (size_t idx : cl) ++count[truth[idx]];
            majority_sum += std::max({count[0], count[1], count[2]});
        }
        double purity = (double)majority_sum / (double)segs.size();
        if (purity >= 0.95) ++pass_seeds;
        else fail_note = "seed " + std::to_string(seed) + ": purity " + fmt3(purity);
    }
    return {pass_seeds == 10,
            std::to_string(pass_seeds) + "/10 seeds at 3 clusters, purity >= 0.95" +
                (fail_note.empty() ? "" : " (" + fail_note + ")")};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    struct Criterion {
        int id;
        const char* name;
        double budget_s;        // stated runtime bound, 0 = none of its own
        bool budget_is_4core;   // bound is stated for a 4-core desktop
        std::function<CheckResult()> run;
    };

    std::map<std::uint64_t, std::string> e2e_dirs;
    const Criterion criteria[] = {
        {1, "gradient oracle", 30, false, check_gradients},
        {2, "surrogate learnability", 120, false, check_learnability},
        {3, "deviation separation", 300, false, check_separation},
        {4, "differential evolution sphere oracle", 30, false, check_de_sphere},
        {5, "Pareto exactness on enumerable grids", 60, false, check_pareto_exact},
        {6, "monitor fixture verdicts", 5, false, check_monitor_fixtures},
        {7, "tackling reproduction", 30, false, check_tackling},
        {8, "end-to-end precision", 1800, true,
         [&] { return check_end_to_end(e2e_dirs); }},
        {9, "meanshift blob recovery", 10, false, check_meanshift_blobs},
        {10, "end-to-end determinism", 0, false,
         [&] { return check_determinism(e2e_dirs); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = c.run();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        bool over_budget = c.budget_s > 0 && secs > c.budget_s;
        if (over_budget && c.budget_is_4core && std::thread::hardware_concurrency() < 4) {
            // the bound is stated for a 4-core desktop; on smaller machines
            // report the time but do not fail the criterion on it
            r.note += " [" + fmt1(secs) + " s against a 4-core budget, " +
                      std::to_string(std::thread::hardware_concurrency()) + " core(s) here]";
            over_budget = false;
        }
        if (over_budget) {
            r.pass = false;
            r.note += " [over " + fmt1(c.budget_s) + " s budget]";
        }
        if (!r.pass) ++failures;
        std::printf("[%s] criterion %2d: %-40s %7.1f s  %s\n", r.pass ? "PASS" : "FAIL", c.id,
                    c.name, secs, r.note.c_str());
        std::fflush(stdout);
    }

    if (failures == 0) std::printf("all criteria pass\n");
    else std::printf("%d criteria FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
