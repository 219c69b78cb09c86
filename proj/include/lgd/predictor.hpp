#pragma once

// State predictor trained on stable flight logs. A single gated recurrent
// cell reads h timesteps of (context, configuration) features and guesses
// the next attitude state; the gap between that guess and what a flight
// actually did is the deviation score the search stage maximizes. Training
// is plain batched Adam on MSE with analytic gradients, small enough to run
// on one core in seconds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lgd/csvio.hpp"
#include "lgd/flightlog.hpp"
#include "lgd/rng.hpp"

namespace lgd {

struct ModelFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingDiverged : std::runtime_error {
    int epoch;
    explicit TrainingDiverged(int e)
        : std::runtime_error("training diverged at epoch " + std::to_string(e)), epoch(e) {}
};

// Min-max scaling per input dimension. Context dims (the first 12) are fit
// from the data; configuration dims always use the parameter range bounds so
// the model's config space and the search space stay the same box.
struct Normalizer {
    Eigen::VectorXd lo, hi;
    double scale(int dim, double v) const { return (v - lo[dim]) / (hi[dim] - lo[dim]); }
};

// Feature values live near [0, 1] by construction; anything this far outside
// means the caller fed the model data from a different world than it was
// normalized for, and a score would be meaningless.
inline constexpr double kFeatureHardBound = 10.0;

struct FeatureWindow {
    Eigen::MatrixXd feat;               // (12 + D) rows, h columns, one per timestep
    Eigen::Matrix<double, 6, 1> target;  // normalized state one step past the window
    int flight_id = 0;
};

struct FeatureDataset {
    std::vector<FeatureWindow> windows;
    Normalizer normalizer;
    int skipped_flights = 0;  // correct flights too short to cut a single window
    int h = 0;
    int config_dim = 0;
};

struct PredictorHyperparams {
    int h = 4;
    int hidden_size = 64;
    int epochs = 50;
    double learning_rate = 1e-3;
    int batch_size = 64;
    double validation_fraction = 0.2;  // of flights, held out for early stopping
};

// --- recurrent cell internals ---------------------------------------------
// Exposed (not tucked into detail) because the gradient tests and any future
// tooling need to drive the raw math directly.

namespace lstm {

// Flat parameter vector layout. Gate rows are stacked [input, forget, cell,
// output] in every 4H-row block.
struct Dims {
    int input = 0, hidden = 0;
    int wx_off() const { return 0; }
    int wh_off() const { return 4 * hidden * input; }
    int b_off() const { return wh_off() + 4 * hidden * hidden; }
    int wy_off() const { return b_off() + 4 * hidden; }
    int by_off() const { return wy_off() + 6 * hidden; }
    int total() const { return by_off() + 6; }
};

struct Batch {
    std::vector<Eigen::MatrixXd> x;  // h matrices, input x B
    Eigen::MatrixXd target;          // 6 x B
};

// Xavier-uniform weights, zero biases except the forget gate's, which starts
// at one so early training does not wipe the cell state.
inline Eigen::VectorXd init_params(const Dims& d, Rng& rng) {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(d.total());
    auto fill = [&](int off, int n, int fan_in, int fan_out) {
        double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < n; ++i) p[off + i] = rng.uniform(-a, a);
    };
    fill(d.wx_off(), 4 * d.hidden * d.input, d.input, 4 * d.hidden);
    fill(d.wh_off(), 4 * d.hidden * d.hidden, d.hidden, 4 * d.hidden);
    fill(d.wy_off(), 6 * d.hidden, d.hidden, 6);
    for (int i = 0; i < d.hidden; ++i) p[d.b_off() + d.hidden + i] = 1.0;
    return p;
}

struct Cache {
    std::vector<Eigen::ArrayXXd> gi, gf, gg, go, ct;  // per-step gate values, tanh(cell)
    std::vector<Eigen::MatrixXd> cell, hidden;        // index t = state entering step t
};

inline Eigen::MatrixXd forward(const Eigen::VectorXd& params, const Dims& d, const Batch& batch,
                               Cache* cache = nullptr) {
    const int H = d.hidden;
    const int steps = (int)batch.x.size();
    const int B = steps ? (int)batch.x[0].cols() : 0;
    Eigen::Map<const Eigen::MatrixXd> Wx(params.data() + d.wx_off(), 4 * H, d.input);
    Eigen::Map<const Eigen::MatrixXd> Wh(params.data() + d.wh_off(), 4 * H, H);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + d.b_off(), 4 * H);
    Eigen::Map<const Eigen::MatrixXd> Wy(params.data() + d.wy_off(), 6, H);
    Eigen::Map<const Eigen::VectorXd> by(params.data() + d.by_off(), 6);

    Eigen::MatrixXd hs = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd cs = Eigen::MatrixXd::Zero(H, B);
    if (cache) {
        cache->hidden.assign(1, hs);
        cache->cell.assign(1, cs);
        cache->gi.clear(), cache->gf.clear(), cache->gg.clear(), cache->go.clear();
        cache->ct.clear();
    }
    for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd z = (Wx * batch.x[t] + Wh * hs).colwise() + b;
        Eigen::ArrayXXd gi = 1.0 / (1.0 + (-z.topRows(H).array()).exp());
        Eigen::ArrayXXd gf = 1.0 / (1.0 + (-z.middleRows(H, H).array()).exp());
        Eigen::ArrayXXd gg = z.middleRows(2 * H, H).array().tanh();
        Eigen::ArrayXXd go = 1.0 / (1.0 + (-z.bottomRows(H).array()).exp());
        cs = (gf * cs.array() + gi * gg).matrix();
        Eigen::ArrayXXd ct = cs.array().tanh();
        hs = (go * ct).matrix();
        if (cache) {
            cache->gi.push_back(std::move(gi));
            cache->gf.push_back(std::move(gf));
            cache->gg.push_back(std::move(gg));
            cache->go.push_back(std::move(go));
            cache->ct.push_back(std::move(ct));
            cache->cell.push_back(cs);
            cache->hidden.push_back(hs);
        }
    }
    return (Wy * hs).colwise() + by;
}

// MSE averaged over batch and output dims, so loss magnitudes compare across
// batch sizes.
inline double loss(const Eigen::VectorXd& params, const Dims& d, const Batch& batch) {
    Eigen::MatrixXd y = forward(params, d, batch);
    return (y - batch.target).squaredNorm() / (6.0 * (double)batch.target.cols());
}

inline double loss_and_grad(const Eigen::VectorXd& params, const Dims& d, const Batch& batch,
                            Eigen::VectorXd& grad) {
    const int H = d.hidden;
    const int steps = (int)batch.x.size();
    const double B = (double)batch.target.cols();
    Cache cache;
    Eigen::MatrixXd y = forward(params, d, batch, &cache);
    double loss = (y - batch.target).squaredNorm() / (6.0 * B);

    Eigen::Map<const Eigen::MatrixXd> Wh(params.data() + d.wh_off(), 4 * H, H);
    Eigen::Map<const Eigen::MatrixXd> Wy(params.data() + d.wy_off(), 6, H);

    grad = Eigen::VectorXd::Zero(d.total());
    Eigen::Map<Eigen::MatrixXd> dWx(grad.data() + d.wx_off(), 4 * H, d.input);
    Eigen::Map<Eigen::MatrixXd> dWh(grad.data() + d.wh_off(), 4 * H, H);
    Eigen::Map<Eigen::VectorXd> db(grad.data() + d.b_off(), 4 * H);
    Eigen::Map<Eigen::MatrixXd> dWy(grad.data() + d.wy_off(), 6, H);
    Eigen::Map<Eigen::VectorXd> dby(grad.data() + d.by_off(), 6);

    Eigen::MatrixXd dy = (2.0 / (6.0 * B)) * (y - batch.target);
    dWy = dy * cache.hidden[steps].transpose();
    dby = dy.rowwise().sum();

    Eigen::MatrixXd dh = Wy.transpose() * dy;
    Eigen::ArrayXXd dcell = Eigen::ArrayXXd::Zero(H, (int)B);
    for (int t = steps - 1; t >= 0; --t) {
        const auto& gi = cache.gi[t];
        const auto& gf = cache.gf[t];
        const auto& gg = cache.gg[t];
        const auto& go = cache.go[t];
        const auto& ct = cache.ct[t];
        Eigen::ArrayXXd dc = dcell + dh.array() * go * (1.0 - ct * ct);
        Eigen::MatrixXd dz(4 * H, (int)B);
        dz.topRows(H) = (dc * gg * gi * (1.0 - gi)).matrix();
        dz.middleRows(H, H) = (dc * cache.cell[t].array() * gf * (1.0 - gf)).matrix();
        dz.middleRows(2 * H, H) = (dc * gi * (1.0 - gg * gg)).matrix();
        dz.bottomRows(H) = (dh.array() * ct * go * (1.0 - go)).matrix();

        dWx += dz * batch.x[t].transpose();
        dWh += dz * cache.hidden[t].transpose();
        db += dz.rowwise().sum();
        dh = Wh.transpose() * dz;
        dcell = dc * gf;
    }
    return loss;
}

}  // namespace lstm

struct SurrogateModel {
    int h = 0;
    int hidden = 0;
    int input_dim = 0;
    int config_dim = 0;
    Normalizer normalizer;
    Eigen::VectorXd params;
    double threshold = 0.0;  // set by calibrate_threshold, zero until then

    // training record
    int epochs_run = 0;
    double initial_val_mse = 0.0;
    double final_val_mse = 0.0;
    double final_train_loss = 0.0;
    std::vector<double> train_curve, val_curve;
};

namespace detail {

inline std::array<double, 12> context_values(const Context& c) {
    return {c.state.roll,    c.state.pitch,      c.state.yaw,
            c.state.roll_rate, c.state.pitch_rate, c.state.yaw_rate,
            c.sensors.gx,    c.sensors.gy,       c.sensors.gz,
            c.sensors.ax,    c.sensors.ay,       c.sensors.az};
}

inline double checked_scale(const Normalizer& nz, int dim, double v) {
    double s = nz.scale(dim, v);
    if (!(std::abs(s) <= kFeatureHardBound))
        throw std::domain_error("feature value far outside the normalized range (dim " +
                                std::to_string(dim) + ", scaled " + std::to_string(s) + ")");
    return s;
}

inline void fill_context_column(const Normalizer& nz, const Context& c,
                                Eigen::Ref<Eigen::MatrixXd> feat, int col) {
    auto vals = context_values(c);
    for (int i = 0; i < 12; ++i) feat(i, col) = checked_scale(nz, i, vals[i]);
}

inline Eigen::VectorXd scaled_config(const Normalizer& nz, const Configuration& cfg) {
    Eigen::VectorXd out((Eigen::Index)cfg.size());
    for (size_t i = 0; i < cfg.size(); ++i) out[(Eigen::Index)i] = checked_scale(nz, 12 + (int)i, cfg[i]);
    return out;
}

inline Eigen::Matrix<double, 6, 1> scaled_state(const Normalizer& nz, const StateUnit& s) {
    Eigen::Matrix<double, 6, 1> t;
    const double vals[6] = {s.roll, s.pitch, s.yaw, s.roll_rate, s.pitch_rate, s.yaw_rate};
    for (int i = 0; i < 6; ++i) t[i] = checked_scale(nz, i, vals[i]);
    return t;
}

}  // namespace detail

// Cuts every correct flight into stride-1 windows of h timesteps plus the
// following state as the target. Flights shorter than h+1 cannot yield a
// window and are counted in skipped_flights.
inline FeatureDataset extract_features(const LogSet& ls, const ParameterTable& table, int h) {
    if (h < 1) throw std::invalid_argument("window length h must be at least 1");

    FeatureDataset ds;
    ds.h = h;
    ds.config_dim = (int)table.size();
    const int input = 12 + ds.config_dim;

    ds.normalizer.lo = Eigen::VectorXd::Zero(input);
    ds.normalizer.hi = Eigen::VectorXd::Ones(input);
    bool any = false;
    for (const auto& f : ls.flights) {
        if (f.verdict != VerdictLabel::Correct) continue;
        for (const auto& e : f.entries) {
            auto vals = detail::context_values(Context{e.state, e.sensors});
            for (int i = 0; i < 12; ++i) {
                if (!any) {
                    ds.normalizer.lo[i] = vals[i];
                    ds.normalizer.hi[i] = vals[i];
                } else {
                    ds.normalizer.lo[i] = std::min(ds.normalizer.lo[i], vals[i]);
                    ds.normalizer.hi[i] = std::max(ds.normalizer.hi[i], vals[i]);
                }
            }
            any = true;
        }
    }
    for (int i = 0; i < 12; ++i)  // guard constant channels
        if (ds.normalizer.hi[i] - ds.normalizer.lo[i] < 1e-9)
            ds.normalizer.hi[i] = ds.normalizer.lo[i] + 1.0;
    for (int i = 0; i < ds.config_dim; ++i) {
        ds.normalizer.lo[12 + i] = table.at((size_t)i).lower;
        ds.normalizer.hi[12 + i] = table.at((size_t)i).upper;
    }

    for (const auto& f : ls.flights) {
        if (f.verdict != VerdictLabel::Correct) continue;
        const int n = (int)f.entries.size();
        if (n < h + 1) {
            ++ds.skipped_flights;
            continue;
        }
        require_config_size(table, f.config);
        Eigen::VectorXd cfg = detail::scaled_config(ds.normalizer, f.config);
        for (int s = 0; s + h < n; ++s) {
            FeatureWindow w;
            w.flight_id = f.id;
            w.feat.resize(input, h);
            for (int t = 0; t < h; ++t) {
                const auto& e = f.entries[s + t];
                detail::fill_context_column(ds.normalizer, Context{e.state, e.sensors}, w.feat, t);
                w.feat.block(12, t, ds.config_dim, 1) = cfg;
            }
            w.target = detail::scaled_state(ds.normalizer, f.entries[s + h].state);
            ds.windows.push_back(std::move(w));
        }
    }
    return ds;
}

namespace detail {

inline lstm::Batch gather_batch(const FeatureDataset& ds, const std::vector<size_t>& idx,
                                size_t begin, size_t end) {
    lstm::Batch b;
    const int B = (int)(end - begin);
    const int input = (int)ds.windows[idx[begin]].feat.rows();
    b.x.assign((size_t)ds.h, Eigen::MatrixXd(input, B));
    b.target.resize(6, B);
    for (size_t k = begin; k < end; ++k) {
        const auto& w = ds.windows[idx[k]];
        for (int t = 0; t < ds.h; ++t) b.x[(size_t)t].col((Eigen::Index)(k - begin)) = w.feat.col(t);
        b.target.col((Eigen::Index)(k - begin)) = w.target;
    }
    return b;
}

inline double eval_mse(const Eigen::VectorXd& params, const lstm::Dims& dims,
                       const FeatureDataset& ds, const std::vector<size_t>& idx) {
    double sse = 0.0;
    const size_t chunk = 512;
    for (size_t at = 0; at < idx.size(); at += chunk) {
        size_t end = std::min(idx.size(), at + chunk);
        auto b = gather_batch(ds, idx, at, end);
        Eigen::MatrixXd y = lstm::forward(params, dims, b);
        sse += (y - b.target).squaredNorm();
    }
    return sse / (6.0 * (double)idx.size());
}

inline void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
    for (size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[(size_t)rng.uniform_int(i)]);
}

inline constexpr std::uint64_t kPredictorInitStream = 0x50494e49;   // "PINI"
inline constexpr std::uint64_t kPredictorSplitStream = 0x5053504c;  // "PSPL"
inline constexpr std::uint64_t kPredictorEpochStream = 0x5045504f;  // "PEPO"

}  // namespace detail

// Batched Adam on MSE. The validation flights are held out whole, so the
// early-stopping signal measures generalization to unseen flights rather
// than to neighboring windows of seen ones; with a single flight there is
// nothing to hold out and the split falls back to window level.
inline SurrogateModel train(const FeatureDataset& ds, const PredictorHyperparams& hp,
                            std::uint64_t seed) {
    if (hp.h < 1) throw std::invalid_argument("h must be at least 1");
    if (hp.hidden_size < 1) throw std::invalid_argument("hidden_size must be at least 1");
    if (hp.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (hp.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (!(hp.learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(hp.validation_fraction > 0.0) || hp.validation_fraction > 0.5)
        throw std::invalid_argument("validation_fraction must be in (0, 0.5]");
    if (ds.h != hp.h)
        throw std::invalid_argument("dataset window length does not match hyperparameters");
    if (ds.windows.size() < 100)
        throw std::invalid_argument("need at least 100 training windows, have " +
                                    std::to_string(ds.windows.size()));

    // hold out whole flights
    std::vector<int> flight_ids;
    for (const auto& w : ds.windows)
        if (std::find(flight_ids.begin(), flight_ids.end(), w.flight_id) == flight_ids.end())
            flight_ids.push_back(w.flight_id);
    Rng split_rng(mix_key({seed, detail::kPredictorSplitStream}));
    for (size_t i = flight_ids.size(); i > 1; --i)
        std::swap(flight_ids[i - 1], flight_ids[(size_t)split_rng.uniform_int(i)]);
    std::vector<size_t> train_idx, val_idx;
    if (flight_ids.size() >= 2) {
        size_t n_val_flights =
            (size_t)std::lround(hp.validation_fraction * (double)flight_ids.size());
        n_val_flights = std::clamp(n_val_flights, (size_t)1, flight_ids.size() - 1);
        std::vector<int> val_ids(flight_ids.begin(), flight_ids.begin() + (long)n_val_flights);
        for (size_t i = 0; i < ds.windows.size(); ++i) {
            bool in_val = std::find(val_ids.begin(), val_ids.end(), ds.windows[i].flight_id) !=
                          val_ids.end();
            (in_val ? val_idx : train_idx).push_back(i);
        }
    } else {
        for (size_t i = 0; i < ds.windows.size(); ++i) train_idx.push_back(i);
        detail::shuffle_indices(train_idx, split_rng);
        size_t n_val = std::max((size_t)1,
                                (size_t)std::lround(hp.validation_fraction * (double)train_idx.size()));
        val_idx.assign(train_idx.end() - (long)n_val, train_idx.end());
        train_idx.resize(train_idx.size() - n_val);
    }

    SurrogateModel model;
    model.h = hp.h;
    model.hidden = hp.hidden_size;
    model.config_dim = ds.config_dim;
    model.input_dim = 12 + ds.config_dim;
    model.normalizer = ds.normalizer;

    lstm::Dims dims{model.input_dim, model.hidden};
    Rng init_rng(mix_key({seed, detail::kPredictorInitStream}));
    Eigen::VectorXd params = lstm::init_params(dims, init_rng);

    model.initial_val_mse = detail::eval_mse(params, dims, ds, val_idx);
    if (!std::isfinite(model.initial_val_mse)) throw TrainingDiverged(0);

    Eigen::VectorXd m = Eigen::VectorXd::Zero(dims.total());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(dims.total());
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    double best_val = model.initial_val_mse;
    Eigen::VectorXd best_params = params;
    int plateau = 0;
    const int patience = 5;

    Eigen::VectorXd grad;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        Rng epoch_rng(mix_key({seed, detail::kPredictorEpochStream, (std::uint64_t)epoch}));
        detail::shuffle_indices(train_idx, epoch_rng);

        double train_sse = 0.0;
        for (size_t at = 0; at < train_idx.size(); at += (size_t)hp.batch_size) {
            size_t end = std::min(train_idx.size(), at + (size_t)hp.batch_size);
            auto batch = detail::gather_batch(ds, train_idx, at, end);
            double loss = lstm::loss_and_grad(params, dims, batch, grad);
            if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
            train_sse += loss * 6.0 * (double)(end - at);

            ++step;
            m = beta1 * m + (1.0 - beta1) * grad;
            v.array() = beta2 * v.array() + (1.0 - beta2) * grad.array().square();
            double bc1 = 1.0 - std::pow(beta1, (double)step);
            double bc2 = 1.0 - std::pow(beta2, (double)step);
            params.array() -=
                hp.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + adam_eps);
        }
        double train_mse = train_sse / (6.0 * (double)train_idx.size());
        double val_mse = detail::eval_mse(params, dims, ds, val_idx);
        if (!std::isfinite(val_mse)) throw TrainingDiverged(epoch);
        model.train_curve.push_back(train_mse);
        model.val_curve.push_back(val_mse);
        model.epochs_run = epoch + 1;

        if (val_mse < best_val) {
            best_val = val_mse;
            best_params = params;
            plateau = 0;
        } else if (++plateau >= patience) {
            break;
        }
    }

    model.params = std::move(best_params);
    model.final_val_mse = best_val;
    model.final_train_loss = model.train_curve.back();
    return model;
}

inline StateUnit predict(const SurrogateModel& model, const FeatureWindow& w) {
    if (w.feat.rows() != model.input_dim || w.feat.cols() != model.h)
        throw std::invalid_argument("feature window shape does not match the model");
    for (Eigen::Index c = 0; c < w.feat.cols(); ++c)
        for (Eigen::Index r = 0; r < w.feat.rows(); ++r)
            if (!(std::abs(w.feat(r, c)) <= kFeatureHardBound))
                throw std::domain_error("feature window holds out-of-range values");

    lstm::Batch b;
    b.x.assign((size_t)model.h, Eigen::MatrixXd(model.input_dim, 1));
    for (int t = 0; t < model.h; ++t) b.x[(size_t)t].col(0) = w.feat.col(t);
    b.target = Eigen::MatrixXd::Zero(6, 1);
    lstm::Dims dims{model.input_dim, model.hidden};
    Eigen::MatrixXd y = lstm::forward(model.params, dims, b);
    return StateUnit{y(0, 0), y(1, 0), y(2, 0), y(3, 0), y(4, 0), y(5, 0)};
}

namespace detail {

// Shared context columns + per-candidate config blocks, one forward pass.
// Returns the L1 gap between each candidate's prediction and the segment's
// recorded next state, in normalized units.
inline std::vector<double> deviation_columns(const SurrogateModel& model, const Segment& seg,
                                             const std::vector<Configuration>& cfgs) {
    if ((int)seg.contexts.size() != model.h + 1)
        throw std::invalid_argument("segment must hold h+1 contexts");
    const int B = (int)cfgs.size();

    lstm::Batch b;
    b.x.assign((size_t)model.h, Eigen::MatrixXd(model.input_dim, B));
    Eigen::VectorXd ctx(12);
    for (int t = 0; t < model.h; ++t) {
        auto vals = context_values(seg.contexts[(size_t)t]);
        for (int i = 0; i < 12; ++i) ctx[i] = checked_scale(model.normalizer, i, vals[i]);
        for (int c = 0; c < B; ++c) b.x[(size_t)t].block(0, c, 12, 1) = ctx;
    }
    for (int c = 0; c < B; ++c) {
        if ((int)cfgs[(size_t)c].size() != model.config_dim)
            throw std::invalid_argument("configuration dimension does not match the model");
        Eigen::VectorXd cv = scaled_config(model.normalizer, cfgs[(size_t)c]);
        for (int t = 0; t < model.h; ++t) b.x[(size_t)t].block(12, c, model.config_dim, 1) = cv;
    }
    Eigen::Matrix<double, 6, 1> target =
        scaled_state(model.normalizer, seg.contexts[(size_t)model.h].state);

    b.target = Eigen::MatrixXd::Zero(6, B);
    lstm::Dims dims{model.input_dim, model.hidden};
    Eigen::MatrixXd y = lstm::forward(model.params, dims, b);

    std::vector<double> out((size_t)B);
    for (int c = 0; c < B; ++c) out[(size_t)c] = (y.col(c) - target).lpNorm<1>();
    return out;
}

}  // namespace detail

inline double deviation(const SurrogateModel& model, const Segment& seg,
                        const Configuration& cfg) {
    return detail::deviation_columns(model, seg, {cfg})[0];
}

inline std::vector<double> deviation_batch(const SurrogateModel& model, const Segment& seg,
                                           const std::vector<Configuration>& cfgs) {
    return detail::deviation_columns(model, seg, cfgs);
}

// The acceptance bar for live flights: the largest deviation the model shows
// on configurations known to fly correctly. Scores past this are anomalies
// worth validating in the simulator.
inline double calibrate_threshold(SurrogateModel& model, const LogSet& stable) {
    std::unordered_map<int, const FlightLog*> by_id;
    for (const auto& f : stable.flights) by_id[f.id] = &f;

    double max_dev = 0.0;
    bool any = false;
    for (const auto& seg : segment(stable, model.h)) {
        const FlightLog* f = by_id.at(seg.flight_id);
        if (f->verdict != VerdictLabel::Correct) continue;
        max_dev = std::max(max_dev, deviation(model, seg, f->config));
        any = true;
    }
    if (!any) throw std::invalid_argument("no correct-verdict segments to calibrate on");
    model.threshold = max_dev;
    return max_dev;
}

inline constexpr int kModelFormatVersion = 1;

inline void save_model(const SurrogateModel& model, const std::string& path) {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["h"] = model.h;
    j["hidden_size"] = model.hidden;
    j["config_dim"] = model.config_dim;
    j["threshold"] = model.threshold;
    j["normalizer"]["lo"] = std::vector<double>(model.normalizer.lo.begin(),
                                                model.normalizer.lo.end());
    j["normalizer"]["hi"] = std::vector<double>(model.normalizer.hi.begin(),
                                                model.normalizer.hi.end());
    j["weights"] = std::vector<double>(model.params.begin(), model.params.end());
    j["training"]["epochs_run"] = model.epochs_run;
    j["training"]["initial_val_mse"] = model.initial_val_mse;
    j["training"]["final_val_mse"] = model.final_val_mse;
    j["training"]["final_train_loss"] = model.final_train_loss;
    j["training"]["train_curve"] = model.train_curve;
    j["training"]["val_curve"] = model.val_curve;
    write_file(path, j.dump(2) + "\n");
}

inline SurrogateModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelFormatError("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError("model file is not valid JSON: " + std::string(e.what()));
    }
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw ModelFormatError("unsupported model format version");

        SurrogateModel m;
        m.h = j.at("h").get<int>();
        m.hidden = j.at("hidden_size").get<int>();
        m.config_dim = j.at("config_dim").get<int>();
        m.input_dim = 12 + m.config_dim;
        m.threshold = j.at("threshold").get<double>();

        auto lo = j.at("normalizer").at("lo").get<std::vector<double>>();
        auto hi = j.at("normalizer").at("hi").get<std::vector<double>>();
        auto w = j.at("weights").get<std::vector<double>>();
        lstm::Dims dims{m.input_dim, m.hidden};
        if ((int)lo.size() != m.input_dim || (int)hi.size() != m.input_dim ||
            (int)w.size() != dims.total())
            throw ModelFormatError("model file has inconsistent dimensions");
        m.normalizer.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), (Eigen::Index)lo.size());
        m.normalizer.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), (Eigen::Index)hi.size());
        m.params = Eigen::Map<const Eigen::VectorXd>(w.data(), (Eigen::Index)w.size());

        const auto& tr = j.at("training");
        m.epochs_run = tr.at("epochs_run").get<int>();
        m.initial_val_mse = tr.at("initial_val_mse").get<double>();
        m.final_val_mse = tr.at("final_val_mse").get<double>();
        m.final_train_loss = tr.at("final_train_loss").get<double>();
        m.train_curve = tr.at("train_curve").get<std::vector<double>>();
        m.val_curve = tr.at("val_curve").get<std::vector<double>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError("model file is missing fields: " + std::string(e.what()));
    }
}

}  // namespace lgd
