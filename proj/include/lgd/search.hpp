#pragma once

// Learning-guided configuration search. Stable-flight segments are clustered
// (meanshift, flat kernel) and a few representatives per cluster seed a
// differential-evolution run that pushes configurations toward large
// surrogate deviation. The union of per-segment winners, deduplicated, is
// the set of potentially incorrect configurations handed to validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgd/csvio.hpp"
#include "lgd/predictor.hpp"

namespace lgd {

struct SearchParams {
    int NP = 200;          // population size (200 for desk runs; 1000 matches the source setup)
    double F = 0.4;        // mutation scaling factor
    double CR = 0.9;       // crossover rate
    int G_max = 200;       // generation cap
    double stagnation_eps = 0.1;  // relative best-fitness gain below this over the window stops the run
    int stagnation_window = 10;
    int top_k = 10;        // configurations kept per segment
    int m = 3;             // representatives sampled per cluster
};

struct Population {
    std::vector<Configuration> members;  // normalized unit-box coordinates
    std::vector<double> fitnesses;
    int generation = 0;
};

struct ScoredConfig {
    Configuration config;
    double fitness = 0.0;
};

struct PotentialEntry {
    Configuration config;  // real units
    double fitness = 0.0;
    int segment_id = 0;    // index into the representative list that found it
};

struct PotentialSet {
    std::vector<PotentialEntry> entries;
    std::vector<int> generations;  // generations executed per representative
};

// Fitness over a batch of normalized configurations. Injectable so the
// search loop can be exercised against closed-form landscapes.
using BatchFitness = std::function<std::vector<double>(const std::vector<Configuration>&)>;

// --- segment clustering ----------------------------------------------------

namespace detail {

// Flatten each segment's contexts into one vector and min-max scale per
// dimension across the set, so no single channel's units dominate distances.
inline std::vector<std::vector<double>> embed_segments(const std::vector<Segment>& segs) {
    const size_t dim = segs.empty() ? 0 : 12 * segs[0].contexts.size();
    std::vector<std::vector<double>> pts(segs.size(), std::vector<double>(dim));
    for (size_t s = 0; s < segs.size(); ++s) {
        if (12 * segs[s].contexts.size() != dim)
            throw std::invalid_argument("segments must share one window length");
        size_t at = 0;
        for (const auto& c : segs[s].contexts) {
            auto vals = context_values(c);
            for (double v : vals) pts[s][at++] = v;
        }
    }
    for (size_t d = 0; d < dim; ++d) {
        double lo = pts[0][d], hi = pts[0][d];
        for (const auto& p : pts) {
            lo = std::min(lo, p[d]);
            hi = std::max(hi, p[d]);
        }
        double span = hi - lo < 1e-9 ? 1.0 : hi - lo;
        for (auto& p : pts) p[d] = (p[d] - lo) / span;
    }
    return pts;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace detail

// Flat-kernel meanshift: every point hill-climbs to the mean of its
// bandwidth neighborhood; converged modes closer than half a bandwidth are
// the same cluster. Quadratic in the segment count, so callers working from
// big campaigns should subsample first.
inline std::vector<std::vector<size_t>> meanshift_cluster(const std::vector<Segment>& segs,
                                                          double bandwidth) {
    if (segs.empty()) throw std::invalid_argument("need at least one segment to cluster");
    if (!(bandwidth > 0)) throw std::invalid_argument("bandwidth must be positive");

    auto pts = detail::embed_segments(segs);
    const double bw2 = bandwidth * bandwidth;
    const double stop = 1e-3 * bandwidth;

    std::vector<std::vector<double>> modes(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        std::vector<double> mode = pts[i];
        for (int iter = 0; iter < 100; ++iter) {
            std::vector<double> mean(mode.size(), 0.0);
            size_t n = 0;
            for (const auto& p : pts)
                if (detail::sq_dist(mode, p) <= bw2) {
                    for (size_t d = 0; d < p.size(); ++d) mean[d] += p[d];
                    ++n;
                }
            for (double& v : mean) v /= (double)n;  // n >= 1: the point itself
            double shift = std::sqrt(detail::sq_dist(mean, mode));
            mode = std::move(mean);
            if (shift < stop) break;
        }
        modes[i] = std::move(mode);
    }

    std::vector<std::vector<double>> centers;
    std::vector<std::vector<size_t>> clusters;
    const double merge2 = (bandwidth / 2) * (bandwidth / 2);
    for (size_t i = 0; i < modes.size(); ++i) {
        size_t at = centers.size();
        for (size_t c = 0; c < centers.size(); ++c)
            if (detail::sq_dist(modes[i], centers[c]) <= merge2) {
                at = c;
                break;
            }
        if (at == centers.size()) {
            centers.push_back(modes[i]);
            clusters.emplace_back();
        }
        clusters[at].push_back(i);
    }
    return clusters;
}

namespace detail {
inline constexpr std::uint64_t kBandwidthStream = 0x4d534257;  // "MSBW"
inline constexpr std::uint64_t kRepStream = 0x52455053;        // "REPS"
inline constexpr std::uint64_t kSearchInitStream = 0x4445494e;  // "DEIN"
inline constexpr std::uint64_t kMutateStream = 0x44454d55;      // "DEMU"
inline constexpr std::uint64_t kCrossStream = 0x4445584f;       // "DEXO"
inline constexpr std::uint64_t kSegmentStream = 0x44455347;     // "DESG"
}  // namespace detail

// Half the median pairwise embedded distance, on a subsample of at most 200
// segments when the set is larger.
inline double meanshift_bandwidth(const std::vector<Segment>& segs, std::uint64_t seed) {
    if (segs.empty()) throw std::invalid_argument("need at least one segment");
    std::vector<size_t> idx(segs.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > 200) {
        Rng rng(mix_key({seed, detail::kBandwidthStream}));
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[(size_t)rng.uniform_int(i)]);
        idx.resize(200);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<Segment> sub;
    sub.reserve(idx.size());
    for (size_t i : idx) sub.push_back(segs[i]);
    auto pts = detail::embed_segments(sub);

    std::vector<double> dists;
    for (size_t a = 0; a < pts.size(); ++a)
        for (size_t b = a + 1; b < pts.size(); ++b)
            dists.push_back(std::sqrt(detail::sq_dist(pts[a], pts[b])));
    if (dists.empty()) return 1.0;  // single segment: any bandwidth gives one cluster
    std::nth_element(dists.begin(), dists.begin() + (long)(dists.size() / 2), dists.end());
    double median = dists[dists.size() / 2];
    return median > 0 ? 0.5 * median : 1.0;
}

// min(m, cluster size) segments per cluster, uniform without replacement,
// listed cluster by cluster in ascending segment order.
inline std::vector<Segment> sample_representatives(const std::vector<Segment>& segs,
                                                   const std::vector<std::vector<size_t>>& clusters,
                                                   int m, std::uint64_t seed) {
    if (m < 1) throw std::invalid_argument("m must be at least 1");
    std::vector<Segment> reps;
    for (size_t ci = 0; ci < clusters.size(); ++ci) {
        std::vector<size_t> pick = clusters[ci];
        if ((int)pick.size() > m) {
            Rng rng(mix_key({seed, detail::kRepStream, (std::uint64_t)ci}));
            for (int k = 0; k < m; ++k)
                std::swap(pick[(size_t)k],
                          pick[(size_t)k + (size_t)rng.uniform_int(pick.size() - (size_t)k)]);
            pick.resize((size_t)m);
            std::sort(pick.begin(), pick.end());
        }
        for (size_t idx : pick) reps.push_back(segs[idx]);
    }
    return reps;
}

// --- differential evolution --------------------------------------------------

namespace detail {

inline Configuration clip_unit(Configuration c) {
    for (double& v : c) v = std::clamp(v, 0.0, 1.0);
    return c;
}

// y = x + F (best - x) + F (r1 - r2), before clipping
inline Configuration mutate_one(const Configuration& x, const Configuration& best,
                                const Configuration& r1, const Configuration& r2, double F) {
    Configuration y(x.size());
    for (size_t j = 0; j < x.size(); ++j)
        y[j] = x[j] + F * (best[j] - x[j]) + F * (r1[j] - r2[j]);
    return y;
}

}  // namespace detail

// Best-guided variant of every member. Per-member random streams keyed on
// (seed, index), so callers fold segment and generation into `seed` and any
// evaluation order reproduces the same draws.
inline std::vector<Configuration> mutate(const Population& pop, double F, std::uint64_t seed) {
    const size_t NP = pop.members.size();
    if (NP < 4) throw std::invalid_argument("mutation needs a population of at least 4");

    size_t best = 0;
    for (size_t i = 1; i < NP; ++i)
        if (pop.fitnesses[i] > pop.fitnesses[best]) best = i;  // ties keep the lowest index

    std::vector<Configuration> out(NP);
    for (size_t i = 0; i < NP; ++i) {
        Rng rng(mix_key({seed, (std::uint64_t)i}));
        size_t r1 = (size_t)rng.uniform_int(NP - 1);
        if (r1 >= i) ++r1;
        size_t r2 = (size_t)rng.uniform_int(NP - 2);
        size_t lo = std::min(i, r1), hi = std::max(i, r1);
        if (r2 >= lo) ++r2;
        if (r2 >= hi) ++r2;
        out[i] = detail::clip_unit(
            detail::mutate_one(pop.members[i], pop.members[best], pop.members[r1],
                               pop.members[r2], F));
    }
    return out;
}

// Binomial crossover: coordinate j comes from the variant when the coin says
// so or when j is the member's forced index.
inline std::vector<Configuration> crossover(const std::vector<Configuration>& x,
                                            const std::vector<Configuration>& y, double CR,
                                            std::uint64_t seed) {
    if (x.size() != y.size()) throw std::invalid_argument("misaligned populations");
    std::vector<Configuration> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        const size_t D = x[i].size();
        Rng rng(mix_key({seed, (std::uint64_t)i}));
        size_t j_rand = (size_t)rng.uniform_int(D);
        Configuration e(D);
        for (size_t j = 0; j < D; ++j) {
            bool take = rng.uniform() < CR;
            e[j] = (take || j == j_rand) ? y[i][j] : x[i][j];
        }
        out[i] = detail::clip_unit(std::move(e));
    }
    return out;
}

// Greedy one-to-one survival: the challenger replaces its parent only when
// strictly fitter. Comparison-only, so any increasing rescale of the fitness
// leaves survivors unchanged.
inline Population select(const Population& pop, const std::vector<Configuration>& experimental,
                         const BatchFitness& fitness) {
    if (experimental.size() != pop.members.size() ||
        pop.fitnesses.size() != pop.members.size())
        throw std::invalid_argument("misaligned populations");
    auto ef = fitness(experimental);
    if (ef.size() != experimental.size())
        throw std::logic_error("fitness evaluator returned the wrong number of scores");

    Population next;
    next.generation = pop.generation + 1;
    next.members.resize(pop.members.size());
    next.fitnesses.resize(pop.members.size());
    for (size_t i = 0; i < pop.members.size(); ++i) {
        if (ef[i] > pop.fitnesses[i]) {
            next.members[i] = experimental[i];
            next.fitnesses[i] = ef[i];
        } else {
            next.members[i] = pop.members[i];
            next.fitnesses[i] = pop.fitnesses[i];
        }
    }
    return next;
}

struct SegmentSearchResult {
    std::vector<ScoredConfig> top;   // sorted by fitness, descending
    int generations = 0;
    std::vector<double> best_curve;  // best fitness at generation 0..generations
};

namespace detail {

inline void validate(const SearchParams& p) {
    if (p.NP < 4) throw std::invalid_argument("NP must be at least 4");
    if (!(p.F > 0.0) || p.F > 2.0) throw std::invalid_argument("F must be in (0, 2]");
    if (p.CR < 0.0 || p.CR > 1.0) throw std::invalid_argument("CR must be in [0, 1]");
    if (p.G_max < 1) throw std::invalid_argument("G_max must be at least 1");
    if (p.top_k < 1 || p.top_k > p.NP) throw std::invalid_argument("top_k must be in [1, NP]");
    if (p.stagnation_window < 1) throw std::invalid_argument("stagnation_window must be positive");
    if (p.stagnation_eps < 0.0) throw std::invalid_argument("stagnation_eps must be nonnegative");
}

}  // namespace detail

// The generation loop in normalized space. Starts one member at `start` and
// the rest jittered ±5% of range around it, runs mutate/crossover/select
// until the cap or until the best fitness gains less than a stagnation_eps
// fraction of itself over the trailing window.
inline SegmentSearchResult search_core(const BatchFitness& fitness, const Configuration& start,
                                       const SearchParams& p, std::uint64_t seed) {
    detail::validate(p);
    if (start.empty()) throw std::invalid_argument("empty start configuration");

    Population pop;
    pop.members.resize((size_t)p.NP);
    pop.members[0] = detail::clip_unit(start);
    for (size_t i = 1; i < (size_t)p.NP; ++i) {
        Rng rng(mix_key({seed, detail::kSearchInitStream, (std::uint64_t)i}));
        Configuration c(start.size());
        for (size_t j = 0; j < start.size(); ++j) c[j] = start[j] + rng.uniform(-0.05, 0.05);
        pop.members[i] = detail::clip_unit(std::move(c));
    }
    pop.fitnesses = fitness(pop.members);
    if (pop.fitnesses.size() != pop.members.size())
        throw std::logic_error("fitness evaluator returned the wrong number of scores");

    SegmentSearchResult res;
    res.best_curve.push_back(*std::max_element(pop.fitnesses.begin(), pop.fitnesses.end()));

    for (int g = 1; g <= p.G_max; ++g) {
        auto variants = mutate(pop, p.F, mix_key({seed, detail::kMutateStream, (std::uint64_t)g}));
        auto experimental = crossover(pop.members, variants, p.CR,
                                      mix_key({seed, detail::kCrossStream, (std::uint64_t)g}));
        pop = select(pop, experimental, fitness);
        res.best_curve.push_back(*std::max_element(pop.fitnesses.begin(), pop.fitnesses.end()));
        res.generations = g;
        if (g >= p.stagnation_window) {
            // relative plateau test: the deviation scale depends on the model
            // and the flight data, so an absolute epsilon would stop every
            // run whose fitness happens to live below it
            double prev = res.best_curve[(size_t)(g - p.stagnation_window)];
            double gain = res.best_curve[(size_t)g] - prev;
            if (gain < p.stagnation_eps * std::max(std::abs(prev), 1e-12)) break;
        }
    }

    std::vector<size_t> order(pop.members.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (pop.fitnesses[a] != pop.fitnesses[b]) return pop.fitnesses[a] > pop.fitnesses[b];
        return a < b;
    });
    for (int k = 0; k < p.top_k; ++k)
        res.top.push_back({pop.members[order[(size_t)k]], pop.fitnesses[order[(size_t)k]]});
    return res;
}

// Search one segment for configurations the surrogate flags. Fitness is the
// batched deviation of the segment's recorded motion against each candidate;
// results come back in real units.
inline SegmentSearchResult search_segment(const SurrogateModel& model, const Segment& seg,
                                          const ParameterTable& table, const SearchParams& p,
                                          std::uint64_t seed) {
    if ((int)seg.contexts.size() != model.h + 1)
        throw std::invalid_argument("segment must hold h+1 contexts");
    if (model.config_dim != (int)table.size())
        throw std::invalid_argument("model and table disagree on parameter count");

    BatchFitness fitness = [&](const std::vector<Configuration>& members) {
        std::vector<Configuration> real;
        real.reserve(members.size());
        for (const auto& m : members) real.push_back(denormalize(table, m));
        return deviation_batch(model, seg, real);
    };
    auto res = search_core(fitness, normalize(table, default_configuration(table)), p, seed);
    for (auto& sc : res.top) sc.config = denormalize(table, sc.config);
    return res;
}

// Unions the per-representative winners into one deduplicated set. A config
// found by several segments keeps its best fitness; exact ties keep the
// earliest find. Entries end up sorted by fitness, descending. Per-segment
// streams are keyed on the segment's own identity (source flight and start
// step), not its position in the list, so a segment's search result does
// not depend on which clusters happened to surround it.
inline PotentialSet run_search(const SurrogateModel& model, const std::vector<Segment>& reps,
                               const ParameterTable& table, const SearchParams& p,
                               std::uint64_t seed) {
    if (reps.empty()) throw std::invalid_argument("need at least one representative segment");

    PotentialSet ps;
    std::vector<std::string> keys;
    for (size_t r = 0; r < reps.size(); ++r) {
        auto res = search_segment(model, reps[r], table, p,
                                  mix_key({seed, detail::kSegmentStream,
                                           (std::uint64_t)reps[r].flight_id,
                                           (std::uint64_t)reps[r].start_index}));
        ps.generations.push_back(res.generations);
        for (const auto& sc : res.top) {
            std::string key = dedup_key(table, sc.config);
            auto at = std::find(keys.begin(), keys.end(), key);
            if (at == keys.end()) {
                keys.push_back(std::move(key));
                ps.entries.push_back({sc.config, sc.fitness, (int)r});
            } else if (sc.fitness > ps.entries[(size_t)(at - keys.begin())].fitness) {
                ps.entries[(size_t)(at - keys.begin())] = {sc.config, sc.fitness, (int)r};
            }
        }
    }

    std::vector<size_t> order(ps.entries.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return ps.entries[a].fitness > ps.entries[b].fitness;
    });
    std::vector<PotentialEntry> sorted;
    sorted.reserve(order.size());
    for (size_t i : order) sorted.push_back(std::move(ps.entries[i]));
    ps.entries = std::move(sorted);
    return ps;
}

// --- files -------------------------------------------------------------------

inline std::string potential_set_to_csv(const ParameterTable& table, const PotentialSet& ps) {
    std::string out = "segment_id,fitness";
    for (size_t i = 0; i < table.size(); ++i) out += "," + table.at(i).name;
    out += "\n";
    for (const auto& e : ps.entries) {
        out += std::to_string(e.segment_id) + "," + fmt_double(e.fitness);
        for (double v : e.config) out += "," + fmt_double(v);
        out += "\n";
    }
    return out;
}

inline void save_potential_set(const PotentialSet& ps, const ParameterTable& table,
                               const SearchParams& p, std::uint64_t seed,
                               const std::string& csv_path, const std::string& meta_path) {
    write_file(csv_path, potential_set_to_csv(table, ps));
    nlohmann::ordered_json j;
    j["params"]["NP"] = p.NP;
    j["params"]["F"] = p.F;
    j["params"]["CR"] = p.CR;
    j["params"]["G_max"] = p.G_max;
    j["params"]["stagnation_eps"] = p.stagnation_eps;
    j["params"]["stagnation_window"] = p.stagnation_window;
    j["params"]["top_k"] = p.top_k;
    j["params"]["m"] = p.m;
    j["seed"] = seed;
    j["generations"] = ps.generations;
    write_file(meta_path, j.dump(2) + "\n");
}

inline PotentialSet load_potential_set(const ParameterTable& table, const std::string& csv_path) {
    auto lines = read_lines(csv_path);
    std::string expect = "segment_id,fitness";
    for (size_t i = 0; i < table.size(); ++i) expect += "," + table.at(i).name;
    if (lines.empty() || trim(lines[0]) != expect)
        throw std::runtime_error("potential set header does not match the parameter table");

    PotentialSet ps;
    for (size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        auto cells = csv_split(lines[r]);
        if (cells.size() != 2 + table.size())
            throw std::runtime_error("potential set row " + std::to_string(r + 1) +
                                     " has the wrong field count");
        PotentialEntry e;
        double id;
        if (!parse_double(cells[0], id) || id != std::floor(id))
            throw std::runtime_error("bad segment id in potential set row " +
                                     std::to_string(r + 1));
        e.segment_id = (int)id;
        if (!parse_double(cells[1], e.fitness))
            throw std::runtime_error("bad fitness in potential set row " + std::to_string(r + 1));
        e.config.resize(table.size());
        for (size_t i = 0; i < table.size(); ++i)
            if (!parse_double(cells[2 + i], e.config[i]))
                throw std::runtime_error("bad value in potential set row " + std::to_string(r + 1));
        ps.entries.push_back(std::move(e));
    }
    return ps;
}

}  // namespace lgd
