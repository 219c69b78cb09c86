#pragma once

// Range-guideline estimation. Validated configurations carry a verdict;
// a guideline is a per-parameter sub-range box scored by two objectives:
// f1, the share of covered configurations that are incorrect (minimize),
// and f2, how many configurations the box covers at all (maximize). A
// non-dominated-sorting evolutionary algorithm returns the Pareto front of
// boxes; users pick their own precision/coverage trade-off from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lgd/csvio.hpp"
#include "lgd/monitor.hpp"
#include "lgd/paramspec.hpp"
#include "lgd/rng.hpp"

namespace lgd {

struct ValidationRecord {
    Configuration config;
    VerdictLabel verdict = VerdictLabel::Correct;

    bool incorrect() const { return verdict != VerdictLabel::Correct; }
};

struct RangeBox {
    std::vector<double> lower;
    std::vector<double> upper;
};

inline bool covered(const RangeBox& box, const ValidationRecord& r) {
    if (box.lower.size() != box.upper.size() || r.config.size() != box.lower.size())
        throw std::invalid_argument("box and configuration dimensions disagree");
    for (size_t j = 0; j < r.config.size(); ++j)
        if (r.config[j] < box.lower[j] || r.config[j] > box.upper[j]) return false;
    return true;
}

// (f1, f2): incorrect share among covered records, and the covered count.
// An empty box covers nothing; scored worst-case so shrinking a range to
// dodge every record never looks attractive.
inline std::pair<double, int> objectives(const RangeBox& box,
                                         const std::vector<ValidationRecord>& records) {
    int cov = 0, bad = 0;
    for (const auto& r : records)
        if (covered(box, r)) {
            ++cov;
            if (r.incorrect()) ++bad;
        }
    if (cov == 0) return {1.0, 0};
    return {(double)bad / cov, cov};
}

inline bool dominates(std::pair<double, int> a, std::pair<double, int> b) {
    return a.first <= b.first && a.second >= b.second &&
           (a.first < b.first || a.second > b.second);
}

struct MoeaParams {
    int population = 100;
    int generations = 200;
    double eta_c = 15.0;   // simulated-binary crossover spread
    double eta_m = 20.0;   // polynomial mutation spread
    double crossover_rate = 0.9;
    double mutation_rate = -1.0;  // negative: use 1 / (2 * parameter count)
    int grid_points = 0;   // 0 = continuous bounds; k >= 2 snaps each bound to k grid points
};

struct RangeGuideline {
    RangeBox bounds;               // real units
    double f1 = 1.0;
    int f2 = 0;
    std::vector<double> reduction;  // per parameter, 1 - new width / original width
};

namespace detail {

inline constexpr std::uint64_t kMoeaStream = 0x4d4f4541;  // "MOEA"

// Genome layout: [lo_0, hi_0, lo_1, hi_1, ...] in per-parameter normalized
// coordinates. Decoding clips, optionally snaps to the grid, and repairs
// inverted or collapsed pairs so every phenotype is a feasible box.
struct MoeaIndividual {
    std::vector<double> genome;
    std::vector<double> nlo, nhi;  // decoded normalized bounds
    double f1 = 1.0;
    int f2 = 0;
    int rank = 0;
    double crowd = 0.0;
};

inline double bound_from_normalized(const ParameterSpec& s, double v) {
    if (v <= 0.0) return s.lower;
    if (v >= 1.0) return s.upper;
    return s.lower + v * (s.upper - s.lower);
}

inline void decode_genome(MoeaIndividual& ind, int grid_points) {
    const size_t D = ind.genome.size() / 2;
    ind.nlo.resize(D);
    ind.nhi.resize(D);
    for (size_t j = 0; j < D; ++j) {
        double a = std::clamp(ind.genome[2 * j], 0.0, 1.0);
        double b = std::clamp(ind.genome[2 * j + 1], 0.0, 1.0);
        if (grid_points >= 2) {
            // work in grid indices so repaired values land exactly on the grid
            long k = grid_points - 1;
            long ai = std::lround(a * (double)k);
            long bi = std::lround(b * (double)k);
            if (ai > bi) std::swap(ai, bi);
            if (ai == bi) {
                if (bi < k) ++bi;
                else --ai;
            }
            a = (double)ai / (double)k;
            b = (double)bi / (double)k;
        } else {
            if (a > b) std::swap(a, b);
            if (a == b) {
                if (b < 1.0) b = std::min(1.0, b + 1e-9);
                else a -= 1e-9;
            }
        }
        ind.nlo[j] = a;
        ind.nhi[j] = b;
    }
}

inline RangeBox real_box(const ParameterTable& table, const std::vector<double>& nlo,
                         const std::vector<double>& nhi) {
    RangeBox box;
    box.lower.resize(table.size());
    box.upper.resize(table.size());
    for (size_t j = 0; j < table.size(); ++j) {
        box.lower[j] = bound_from_normalized(table.at(j), nlo[j]);
        box.upper[j] = bound_from_normalized(table.at(j), nhi[j]);
    }
    return box;
}

inline std::vector<std::vector<size_t>> nondominated_fronts(std::vector<MoeaIndividual>& inds) {
    const size_t n = inds.size();
    std::vector<int> dom_count(n, 0);
    std::vector<std::vector<size_t>> dominated(n);
    std::vector<std::vector<size_t>> fronts(1);
    for (size_t p = 0; p < n; ++p) {
        for (size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates({inds[p].f1, inds[p].f2}, {inds[q].f1, inds[q].f2}))
                dominated[p].push_back(q);
            else if (dominates({inds[q].f1, inds[q].f2}, {inds[p].f1, inds[p].f2}))
                ++dom_count[p];
        }
        if (dom_count[p] == 0) {
            inds[p].rank = 0;
            fronts[0].push_back(p);
        }
    }
    size_t at = 0;
    while (at < fronts.size() && !fronts[at].empty()) {
        std::vector<size_t> next;
        for (size_t p : fronts[at])
            for (size_t q : dominated[p])
                if (--dom_count[q] == 0) {
                    inds[q].rank = (int)at + 1;
                    next.push_back(q);
                }
        if (next.empty()) break;
        fronts.push_back(std::move(next));
        ++at;
    }
    return fronts;
}

inline void assign_crowding(std::vector<MoeaIndividual>& inds, const std::vector<size_t>& front) {
    for (size_t i : front) inds[i].crowd = 0.0;
    if (front.size() < 3) {
        for (size_t i : front) inds[i].crowd = std::numeric_limits<double>::infinity();
        return;
    }
    for (int obj = 0; obj < 2; ++obj) {
        std::vector<size_t> order = front;
        auto value = [&](size_t i) { return obj == 0 ? inds[i].f1 : (double)inds[i].f2; };
        std::sort(order.begin(), order.end(),
                  [&](size_t a, size_t b) { return value(a) < value(b); });
        double span = value(order.back()) - value(order.front());
        inds[order.front()].crowd = std::numeric_limits<double>::infinity();
        inds[order.back()].crowd = std::numeric_limits<double>::infinity();
        if (span <= 0.0) continue;
        for (size_t k = 1; k + 1 < order.size(); ++k)
            inds[order[k]].crowd += (value(order[k + 1]) - value(order[k - 1])) / span;
    }
}

inline size_t tournament(const std::vector<MoeaIndividual>& inds, Rng& rng) {
    size_t a = (size_t)rng.uniform_int(inds.size());
    size_t b = (size_t)rng.uniform_int(inds.size());
    if (inds[a].rank != inds[b].rank) return inds[a].rank < inds[b].rank ? a : b;
    if (inds[a].crowd != inds[b].crowd) return inds[a].crowd > inds[b].crowd ? a : b;
    return a;
}

inline void sbx_pair(const std::vector<double>& p1, const std::vector<double>& p2,
                     std::vector<double>& c1, std::vector<double>& c2, double eta, double rate,
                     Rng& rng) {
    c1 = p1;
    c2 = p2;
    if (rng.uniform() >= rate) return;
    for (size_t j = 0; j < p1.size(); ++j) {
        if (rng.uniform() > 0.5) continue;
        if (std::abs(p1[j] - p2[j]) < 1e-14) continue;
        double u = rng.uniform();
        double beta = u <= 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0))
                               : std::pow(1.0 / (2.0 * (1.0 - u)), 1.0 / (eta + 1.0));
        double x1 = p1[j], x2 = p2[j];
        c1[j] = std::clamp(0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2), 0.0, 1.0);
        c2[j] = std::clamp(0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2), 0.0, 1.0);
    }
}

inline void polynomial_mutate(std::vector<double>& g, double eta, double pm, Rng& rng) {
    for (double& x : g) {
        if (rng.uniform() >= pm) continue;
        double u = rng.uniform();
        double delta = u < 0.5 ? std::pow(2.0 * u, 1.0 / (eta + 1.0)) - 1.0
                               : 1.0 - std::pow(2.0 * (1.0 - u), 1.0 / (eta + 1.0));
        x = std::clamp(x + delta, 0.0, 1.0);
    }
}

// Every evaluated solution is offered to an archive holding one box per
// non-dominated objective pair (first find kept). The final front is the
// union of this archive and the last population's first front, so an
// objective pair discovered mid-run cannot be crowded out and lost.
struct PairArchive {
    std::map<std::pair<double, int>, std::pair<std::vector<double>, std::vector<double>>> boxes;

    // true when the archive changed (a pair a dominated pair can never
    // re-enter later: dominance is transitive, so its dominator, or a
    // dominator of that, is always present to reject it)
    bool offer(const MoeaIndividual& ind) {
        std::pair<double, int> p{ind.f1, ind.f2};
        if (boxes.count(p)) return false;
        for (const auto& [q, box] : boxes)
            if (dominates(q, p)) return false;
        for (auto it = boxes.begin(); it != boxes.end();)
            it = dominates(p, it->first) ? boxes.erase(it) : std::next(it);
        boxes.emplace(p, std::make_pair(ind.nlo, ind.nhi));
        return true;
    }
};

inline void validate(const MoeaParams& p) {
    if (p.population < 4) throw std::invalid_argument("population must be at least 4");
    if (p.generations < 1) throw std::invalid_argument("generations must be at least 1");
    if (!(p.eta_c > 0) || !(p.eta_m > 0))
        throw std::invalid_argument("distribution spreads must be positive");
    if (p.crossover_rate < 0.0 || p.crossover_rate > 1.0)
        throw std::invalid_argument("crossover_rate must be in [0, 1]");
    if (p.mutation_rate > 1.0) throw std::invalid_argument("mutation_rate must be at most 1");
    if (p.grid_points == 1 || p.grid_points < 0)
        throw std::invalid_argument("grid_points must be 0 or at least 2");
}

}  // namespace detail

// Two-objective front of range boxes over the validated set. Elitist
// non-dominated sorting with crowding diversity; one member of the initial
// population is the unchanged original range. Output is sorted by coverage
// (f2) ascending and deduplicated on (f1, f2, bounds).
inline std::vector<RangeGuideline> pareto_optimize(const std::vector<ValidationRecord>& records,
                                                   const ParameterTable& table,
                                                   const MoeaParams& params, std::uint64_t seed) {
    detail::validate(params);
    if (records.empty()) throw std::invalid_argument("need at least one validated configuration");
    for (const auto& r : records) require_config_size(table, r.config);

    const size_t D = table.size();
    const size_t N = (size_t)params.population;
    const double pm = params.mutation_rate >= 0.0 ? params.mutation_rate : 1.0 / (2.0 * (double)D);
    Rng rng(mix_key({seed, detail::kMoeaStream}));

    auto evaluate = [&](detail::MoeaIndividual& ind) {
        detail::decode_genome(ind, params.grid_points);
        auto [f1, f2] = objectives(detail::real_box(table, ind.nlo, ind.nhi), records);
        ind.f1 = f1;
        ind.f2 = f2;
    };

    detail::PairArchive archive;
    std::vector<detail::MoeaIndividual> pop(N);
    for (size_t i = 0; i < N; ++i) {
        pop[i].genome.resize(2 * D);
        for (size_t g = 0; g < 2 * D; ++g)
            pop[i].genome[g] = i == 0 ? (g % 2 == 0 ? 0.0 : 1.0) : rng.uniform();
        evaluate(pop[i]);
        archive.offer(pop[i]);
    }
    {
        auto fronts = detail::nondominated_fronts(pop);
        for (const auto& f : fronts) detail::assign_crowding(pop, f);
    }

    for (int gen = 0; gen < params.generations; ++gen) {
        std::vector<detail::MoeaIndividual> off;
        off.reserve(N);
        while (off.size() < N) {
            const auto& p1 = pop[detail::tournament(pop, rng)];
            const auto& p2 = pop[detail::tournament(pop, rng)];
            detail::MoeaIndividual c1, c2;
            detail::sbx_pair(p1.genome, p2.genome, c1.genome, c2.genome, params.eta_c,
                             params.crossover_rate, rng);
            detail::polynomial_mutate(c1.genome, params.eta_m, pm, rng);
            detail::polynomial_mutate(c2.genome, params.eta_m, pm, rng);
            off.push_back(std::move(c1));
            if (off.size() < N) off.push_back(std::move(c2));
        }
        for (auto& ind : off) {
            evaluate(ind);
            archive.offer(ind);
        }

        for (auto& ind : pop) off.push_back(std::move(ind));
        auto fronts = detail::nondominated_fronts(off);
        for (const auto& f : fronts) detail::assign_crowding(off, f);

        std::vector<detail::MoeaIndividual> next;
        next.reserve(N);
        for (const auto& f : fronts) {
            if (next.size() + f.size() <= N) {
                for (size_t i : f) next.push_back(std::move(off[i]));
            } else {
                std::vector<size_t> order = f;
                std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
                    if (off[a].crowd != off[b].crowd) return off[a].crowd > off[b].crowd;
                    return a < b;
                });
                for (size_t i : order) {
                    if (next.size() == N) break;
                    next.push_back(std::move(off[i]));
                }
            }
            if (next.size() == N) break;
        }
        pop = std::move(next);
    }

    // On a grid the box space is finite; when it is small enough, sweep all
    // of it through the archive after the evolutionary phase. The population
    // search alone misses knee pairs whose only approach runs through
    // dominated intermediates (measured on random 2-parameter grid
    // instances: ~1 in 6 ends up short a pair or two, and a single-step
    // neighborhood walk on the archive stalls at the same barriers), while
    // enumeration is exact and cheap at that scale. Larger grid spaces keep
    // the purely evolutionary result.
    if (params.grid_points >= 2) {
        std::vector<std::pair<double, double>> bound_pairs;  // normalized (lo, hi), lo < hi
        const long k = params.grid_points - 1;
        for (long a = 0; a <= k; ++a)
            for (long b = a + 1; b <= k; ++b)
                bound_pairs.emplace_back((double)a / (double)k, (double)b / (double)k);
        double total = 1.0;
        for (size_t j = 0; j < D && total <= 1e5; ++j) total *= (double)bound_pairs.size();
        if (total <= 1e5) {
            std::vector<size_t> digit(D, 0);
            detail::MoeaIndividual nb;
            nb.genome.resize(2 * D);
            for (;;) {
                for (size_t j = 0; j < D; ++j) {
                    nb.genome[2 * j] = bound_pairs[digit[j]].first;
                    nb.genome[2 * j + 1] = bound_pairs[digit[j]].second;
                }
                evaluate(nb);
                archive.offer(nb);
                size_t j = 0;
                while (j < D && ++digit[j] == bound_pairs.size()) digit[j++] = 0;
                if (j == D) break;
            }
        }
    }

    // The archive saw every evaluated solution, so its pairs are exactly the
    // non-dominated objective pairs found anywhere in the run, one box each.
    // Distinct non-dominated pairs can never share an f2 (equal coverage
    // with different f1 would be a domination), so the front has at most one
    // guideline per coverage level.
    std::vector<RangeGuideline> front;
    for (const auto& [obj, box] : archive.boxes) {
        RangeGuideline g;
        g.bounds = detail::real_box(table, box.first, box.second);
        g.f1 = obj.first;
        g.f2 = obj.second;
        g.reduction.resize(D);
        for (size_t j = 0; j < D; ++j)
            g.reduction[j] = 1.0 - (g.bounds.upper[j] - g.bounds.lower[j]) /
                                       (table.at(j).upper - table.at(j).lower);
        front.push_back(std::move(g));
    }
    std::sort(front.begin(), front.end(),
              [](const RangeGuideline& a, const RangeGuideline& b) { return a.f2 < b.f2; });
    return front;
}

// --- files -------------------------------------------------------------------

inline std::string guideline_to_csv(const ParameterTable& table, const RangeGuideline& g) {
    if (g.bounds.lower.size() != table.size() || g.bounds.upper.size() != table.size() ||
        g.reduction.size() != table.size())
        throw std::invalid_argument("guideline does not match the parameter table");
    std::string out = "param,lower,upper,reduce_pct\n";
    for (size_t j = 0; j < table.size(); ++j)
        out += table.at(j).name + "," + fmt_double(g.bounds.lower[j]) + "," +
               fmt_double(g.bounds.upper[j]) + "," + fmt_double(100.0 * g.reduction[j]) + "\n";
    return out;
}

inline void save_guideline(const RangeGuideline& g, const ParameterTable& table,
                           const std::string& path) {
    write_file(path, guideline_to_csv(table, g));
}

inline std::string front_summary_to_csv(const std::vector<RangeGuideline>& front) {
    std::string out = "guideline_id,f1,f2,covered,covered_incorrect\n";
    for (size_t i = 0; i < front.size(); ++i)
        out += std::to_string(i) + "," + fmt_double(front[i].f1) + "," +
               std::to_string(front[i].f2) + "," + std::to_string(front[i].f2) + "," +
               std::to_string((long long)std::llround(front[i].f1 * front[i].f2)) + "\n";
    return out;
}

inline void save_front_summary(const std::vector<RangeGuideline>& front, const std::string& path) {
    write_file(path, front_summary_to_csv(front));
}

}  // namespace lgd
