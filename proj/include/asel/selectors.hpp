#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asel/expr.hpp"
#include "asel/labeling.hpp"
#include "asel/net.hpp"
#include "asel/portfolio.hpp"

// The four selector families on top of the neural core:
//   ModelA   — problem features + trainable per-algorithm embedding
//   ModelB   — problem features + predefined algorithm features
//   ModelReg — per-algorithm performance regression on problem features
//   ModelCla — multi-class classification on problem features

namespace asel {

enum class SelectorKind { ModelA, ModelB, ModelReg, ModelCla };

inline const char* selector_kind_name(SelectorKind k) {
    switch (k) {
        case SelectorKind::ModelA: return "model_a";
        case SelectorKind::ModelB: return "model_b";
        case SelectorKind::ModelReg: return "model_reg";
        case SelectorKind::ModelCla: return "model_cla";
    }
    return "?";
}

inline SelectorKind selector_kind_from_name(const std::string& s) {
    if (s == "model_a") return SelectorKind::ModelA;
    if (s == "model_b") return SelectorKind::ModelB;
    if (s == "model_reg") return SelectorKind::ModelReg;
    if (s == "model_cla") return SelectorKind::ModelCla;
    throw std::invalid_argument("unknown selector kind: " + s);
}

struct DataBindings {
    int feature_len = 0;     // F
    int algo_count = 0;      // |S_A|
    int predefined_len = 11; // G
    int embedding_dim = 16;  // ModelA adaptive feature width
    double gamma_margin = 0.1;
};

struct NoEmbeddingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SelectorModel {
    SelectorKind kind = SelectorKind::ModelB;
    DataBindings bind;
    Network net;  // ModelA: the body above the embedding layer

    // ModelA embedding state: PF is the frozen feature matrix of the
    // training problems, AF the trained per-algorithm embedding.
    Eigen::MatrixXd pf;  // F x |S_P|
    Eigen::MatrixXd af;  // E x |S_A|
    std::vector<int> algo_ids;  // column/output order of the candidate set

    // ModelReg target normalization (per algorithm column)
    Eigen::VectorXd reg_mean, reg_std;

    int algo_position(int algo_id) const {
        for (std::size_t j = 0; j < algo_ids.size(); ++j)
            if (algo_ids[j] == algo_id) return static_cast<int>(j);
        return -1;
    }
};

// Loss Lipschitz constants reported as bound inputs: bce-on-sigmoid 1/4
// w.r.t. the score, mse 2*max|target| with targets clipped to [-3,3],
// softmax cross-entropy 1 w.r.t. logits.
inline double loss_lipschitz(SelectorKind k) {
    switch (k) {
        case SelectorKind::ModelA:
        case SelectorKind::ModelB: return 0.25;
        case SelectorKind::ModelReg: return 6.0;
        case SelectorKind::ModelCla: return 1.0;
    }
    return 1.0;
}

// hidden widths = round(128 k), three relu layers
inline SelectorModel build_selector(SelectorKind kind, const DataBindings& bind,
                                    double width_multiplier, std::uint64_t seed) {
    if (!(width_multiplier >= 0.25 && width_multiplier <= 2.0))
        throw std::invalid_argument("width multiplier must be in [0.25, 2]");
    const int h = static_cast<int>(std::lround(128.0 * width_multiplier));
    SelectorModel m;
    m.kind = kind;
    m.bind = bind;
    std::vector<Activation> acts = {Activation::Relu, Activation::Relu, Activation::Relu,
                                    Activation::Identity};
    switch (kind) {
        case SelectorKind::ModelA:
            m.net = make_network({bind.feature_len + bind.embedding_dim, h, h, h, 1}, acts, seed);
            break;
        case SelectorKind::ModelB:
            m.net = make_network({bind.feature_len + bind.predefined_len, h, h, h, 1}, acts, seed);
            break;
        case SelectorKind::ModelReg:
        case SelectorKind::ModelCla:
            m.net = make_network({bind.feature_len, h, h, h, bind.algo_count}, acts, seed);
            break;
    }
    return m;
}

struct FitOptions {
    int epochs = 40;
    double lr = 0.05;
    int batch_size = 256;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

// one pass of minibatch SGD for ModelA: backprop through the body and
// accumulate embedding-column gradients; PF rows are data, never touched.
inline void fit_model_a(SelectorModel& m, const Eigen::MatrixXd& features, const Split& split,
                        const PerformanceMatrix& perf, const FitOptions& opt) {
    const int F = m.bind.feature_len;
    const int E = m.bind.embedding_dim;
    const std::size_t na = perf.algo_count();
    // frozen PF snapshot (training problems, one column each)
    m.pf.resize(F, static_cast<Eigen::Index>(split.train_idx.size()));
    for (std::size_t c = 0; c < split.train_idx.size(); ++c)
        m.pf.col(static_cast<Eigen::Index>(c)) =
            features.row(static_cast<Eigen::Index>(split.train_idx[c])).transpose();
    // embedding init, same scaled-uniform scheme as the dense layers
    Rng rng(derive_seed(opt.seed, 0xAF01ULL));
    m.af.resize(E, static_cast<Eigen::Index>(na));
    const double a = std::sqrt(6.0 / (E + static_cast<double>(na)));
    for (Eigen::Index i = 0; i < m.af.rows(); ++i)
        for (Eigen::Index j = 0; j < m.af.cols(); ++j) m.af(i, j) = rng.uniform(-a, a);
    m.algo_ids = perf.algo_ids;

    const std::size_t n_pairs = split.train_idx.size() * na;
    std::vector<std::size_t> order(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) order[i] = i;
    const double pos_weight = static_cast<double>(na > 1 ? na - 1 : 1);

    Network& net = m.net;
    const std::size_t L = net.layers.size();
    std::vector<Eigen::MatrixXd> act(L + 1), pre(L);
    const Eigen::Index bs = std::min<Eigen::Index>(opt.batch_size, static_cast<Eigen::Index>(n_pairs));
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = n_pairs; i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        for (std::size_t off = 0; off < n_pairs; off += static_cast<std::size_t>(bs)) {
            const Eigen::Index mlen =
                std::min<Eigen::Index>(bs, static_cast<Eigen::Index>(n_pairs - off));
            Eigen::MatrixXd X(F + E, mlen);
            Eigen::VectorXd y(mlen), w(mlen);
            std::vector<Eigen::Index> acol(static_cast<std::size_t>(mlen));
            for (Eigen::Index c = 0; c < mlen; ++c) {
                const std::size_t pair = order[off + static_cast<std::size_t>(c)];
                const std::size_t pi = pair / na;
                const std::size_t aj = pair % na;
                X.col(c).head(F) = m.pf.col(static_cast<Eigen::Index>(pi));
                X.col(c).tail(E) = m.af.col(static_cast<Eigen::Index>(aj));
                const bool best = perf.best_algo[split.train_idx[pi]] == perf.algo_ids[aj];
                y(c) = best ? 1.0 : 0.0;
                w(c) = best ? pos_weight : 1.0;
                acol[static_cast<std::size_t>(c)] = static_cast<Eigen::Index>(aj);
            }
            act[0] = X;
            for (std::size_t k = 0; k < L; ++k) {
                const auto& l = net.layers[k];
                pre[k] = (l.W * act[k]).colwise() + l.b;
                act[k + 1] =
                    pre[k].unaryExpr([&](double v) { return apply_activation(l.act, v); });
            }
            const double wsum = w.sum();
            Eigen::MatrixXd delta(1, mlen);
            for (Eigen::Index c = 0; c < mlen; ++c) {
                const double s = 1.0 / (1.0 + std::exp(-pre[L - 1](0, c)));
                delta(0, c) = w(c) * (s - y(c)) / wsum;
            }
            for (std::size_t k = L; k-- > 0;) {
                auto& l = net.layers[k];
                Eigen::MatrixXd dW = delta * act[k].transpose();
                Eigen::VectorXd db = delta.rowwise().sum();
                Eigen::MatrixXd back = l.W.transpose() * delta;
                if (k > 0) {
                    delta = back.cwiseProduct(pre[k - 1].unaryExpr([&](double v) {
                        return activation_derivative(net.layers[k - 1].act, v);
                    }));
                } else {
                    // embedding gradient: the tail rows of the input gradient
                    for (Eigen::Index c = 0; c < mlen; ++c)
                        m.af.col(acol[static_cast<std::size_t>(c)]) -=
                            opt.lr * back.col(c).tail(E);
                }
                l.W.noalias() -= opt.lr * dW;
                l.b.noalias() -= opt.lr * db;
            }
        }
    }
}

}  // namespace detail

inline void fit(SelectorModel& m, const Eigen::MatrixXd& features, const Split& split,
                const PerformanceMatrix& perf, const std::vector<AlgorithmSpec>& portfolio,
                const FitOptions& opt) {
    if (split.train_idx.empty()) throw std::invalid_argument("fit: empty training split");
    const std::size_t na = perf.algo_count();
    const int F = m.bind.feature_len;
    m.algo_ids = perf.algo_ids;

    if (m.kind == SelectorKind::ModelA) {
        detail::fit_model_a(m, features, split, perf, opt);
        return;
    }

    TrainOptions topt;
    topt.epochs = opt.epochs;
    topt.lr = opt.lr;
    topt.batch_size = opt.batch_size;
    topt.weight_decay = opt.weight_decay;
    topt.seed = opt.seed;

    if (m.kind == SelectorKind::ModelB) {
        // jitter the algorithm-feature block: with only |S_A| distinct
        // vectors the net otherwise memorizes them as points and
        // extrapolates wildly on unseen algorithms. Each (problem,
        // algorithm) pair is replicated with independent noise so the net
        // sees a smoothing kernel around every seen algorithm instead of a
        // single memorizable point. The noise is scaled per dimension to
        // the portfolio's own spread, so directions along which the
        // training algorithms barely differ keep their discriminating
        // signal while well-spread directions get real smoothing.
        constexpr int kReplicas = 3;
        constexpr double kJitterScale = 0.05;
        const std::size_t n_pairs = split.train_idx.size() * na * kReplicas;
        TrainData d;
        d.X.resize(static_cast<Eigen::Index>(n_pairs), F + m.bind.predefined_len);
        d.Y.resize(static_cast<Eigen::Index>(n_pairs), 1);
        d.weights.resize(static_cast<Eigen::Index>(n_pairs));
        const double pos_weight = static_cast<double>(na > 1 ? na - 1 : 1);
        std::vector<Eigen::VectorXd> gfeat(na);
        for (std::size_t j = 0; j < na; ++j) {
            const auto g = portfolio[j].predefined_features();
            gfeat[j] = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
        }
        Eigen::VectorXd gsigma =
            Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.bind.predefined_len));
        if (na > 1) {
            Eigen::VectorXd gmean = Eigen::VectorXd::Zero(gsigma.size());
            for (std::size_t j = 0; j < na; ++j) gmean += gfeat[j];
            gmean /= static_cast<double>(na);
            for (std::size_t j = 0; j < na; ++j)
                gsigma += (gfeat[j] - gmean).cwiseAbs2();
            gsigma = (gsigma / static_cast<double>(na - 1)).cwiseSqrt() * kJitterScale;
        }
        Rng jit(derive_seed(opt.seed, 0xB0B0ULL));
        Eigen::Index r = 0;
        for (std::size_t pi : split.train_idx) {
            for (std::size_t j = 0; j < na; ++j) {
                const bool best = perf.best_algo[pi] == perf.algo_ids[j];
                for (int rep = 0; rep < kReplicas; ++rep, ++r) {
                    d.X.row(r).head(F) = features.row(static_cast<Eigen::Index>(pi));
                    d.X.row(r).tail(m.bind.predefined_len) = gfeat[j].transpose();
                    for (int g = 0; g < m.bind.predefined_len; ++g)
                        d.X(r, F + g) += gsigma(g) * jit.normal();
                    d.Y(r, 0) = best ? 1.0 : 0.0;
                    d.weights(r) = best ? pos_weight : 1.0;
                }
            }
        }
        topt.loss = Loss::Bce;
        train(m.net, d, topt);
        return;
    }

    if (m.kind == SelectorKind::ModelReg) {
        const Eigen::Index np = static_cast<Eigen::Index>(split.train_idx.size());
        Eigen::MatrixXd targets(np, static_cast<Eigen::Index>(na));
        // raw best values span ~300 orders of magnitude; compress with a
        // shared sign-preserving log so column statistics are meaningful.
        // The map is monotone, so argmin in compressed units = argmin raw.
        auto squash = [](double v) { return std::copysign(std::log1p(std::abs(v)), v); };
        for (Eigen::Index r = 0; r < np; ++r)
            for (std::size_t j = 0; j < na; ++j)
                targets(r, static_cast<Eigen::Index>(j)) =
                    squash(perf.mean_best[split.train_idx[static_cast<std::size_t>(r)]][j]);
        // per-problem standardization: a positive affine map of a row
        // leaves its argmin unchanged, so removing the shared "problem
        // difficulty" offset and magnitude spread costs nothing at
        // inference and stops a handful of huge-magnitude problems from
        // dominating the squared loss
        targets.colwise() -= targets.rowwise().mean();
        for (Eigen::Index r = 0; r < np; ++r) {
            const double rsd = std::sqrt(targets.row(r).squaredNorm() /
                                         std::max<double>(1, static_cast<double>(na) - 1));
            if (rsd > 1e-12) targets.row(r) /= rsd;
        }
        // per-column z-score so every algorithm's residuals carry equal
        // weight in the squared loss; scores() undoes the affine map, so
        // the cross-column argmin is still taken in the shared scale
        m.reg_mean.resize(static_cast<Eigen::Index>(na));
        m.reg_std.resize(static_cast<Eigen::Index>(na));
        for (Eigen::Index j = 0; j < targets.cols(); ++j) {
            const double mu = targets.col(j).mean();
            const double var = (targets.col(j).array() - mu).square().sum() /
                               std::max<double>(1, static_cast<double>(np) - 1);
            m.reg_mean(j) = mu;
            m.reg_std(j) = std::max(std::sqrt(var), 1e-12);
        }
        TrainData d;
        d.X.resize(np, F);
        d.Y.resize(np, static_cast<Eigen::Index>(na));
        for (Eigen::Index r = 0; r < np; ++r) {
            d.X.row(r) = features.row(static_cast<Eigen::Index>(split.train_idx[static_cast<std::size_t>(r)]));
            for (Eigen::Index j = 0; j < d.Y.cols(); ++j)
                d.Y(r, j) = std::clamp((targets(r, j) - m.reg_mean(j)) / m.reg_std(j), -3.0, 3.0);
        }
        topt.loss = Loss::Mse;
        train(m.net, d, topt);
        return;
    }

    // ModelCla
    const Eigen::Index np = static_cast<Eigen::Index>(split.train_idx.size());
    TrainData d;
    d.X.resize(np, F);
    d.Y = Eigen::MatrixXd::Zero(np, static_cast<Eigen::Index>(na));
    for (Eigen::Index r = 0; r < np; ++r) {
        const std::size_t pi = split.train_idx[static_cast<std::size_t>(r)];
        d.X.row(r) = features.row(static_cast<Eigen::Index>(pi));
        const int pos = m.algo_position(perf.best_algo[pi]);
        d.Y(r, pos) = 1.0;
    }
    topt.loss = Loss::SoftmaxCe;
    train(m.net, d, topt);
}

struct Candidate {
    int id = 0;
    Eigen::VectorXd predefined;  // only ModelB reads this
};

// per-candidate matching scores; higher is better (ModelReg negates its
// predicted performance so the convention is uniform)
inline std::vector<double> scores(const SelectorModel& m, const Eigen::VectorXd& prob_features,
                                  const std::vector<Candidate>& candidates) {
    std::vector<double> out;
    out.reserve(candidates.size());
    Eigen::VectorXd pred;
    if (m.kind == SelectorKind::ModelReg || m.kind == SelectorKind::ModelCla)
        pred = forward(m.net, prob_features);
    for (const auto& c : candidates) {
        switch (m.kind) {
            case SelectorKind::ModelA: {
                const int j = m.algo_position(c.id);
                if (j < 0)
                    throw NoEmbeddingError("model_a has no embedding for algorithm id " +
                                           std::to_string(c.id));
                Eigen::VectorXd x(m.bind.feature_len + m.bind.embedding_dim);
                x << prob_features, m.af.col(j);
                out.push_back(forward(m.net, x)(0));
                break;
            }
            case SelectorKind::ModelB: {
                Eigen::VectorXd x(m.bind.feature_len + m.bind.predefined_len);
                x << prob_features, c.predefined;
                out.push_back(forward(m.net, x)(0));
                break;
            }
            case SelectorKind::ModelReg: {
                const int j = m.algo_position(c.id);
                if (j < 0)
                    throw NoEmbeddingError("model_reg has no output for algorithm id " +
                                           std::to_string(c.id));
                // undo the per-algorithm z-scoring: argmin must be taken in
                // shared (log-compressed) units, not per-column standard units
                const double raw = m.reg_std.size() > j
                                       ? pred(j) * m.reg_std(j) + m.reg_mean(j)
                                       : pred(j);
                out.push_back(-raw);
                break;
            }
            case SelectorKind::ModelCla: {
                const int j = m.algo_position(c.id);
                if (j < 0)
                    throw NoEmbeddingError("model_cla has no output for algorithm id " +
                                           std::to_string(c.id));
                out.push_back(pred(j));
                break;
            }
        }
    }
    return out;
}

// argmax score, ties to the lowest algorithm id
inline int select(const SelectorModel& m, const Eigen::VectorXd& prob_features,
                  const std::vector<Candidate>& candidates) {
    if (candidates.empty()) throw std::invalid_argument("select: empty candidate set");
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return candidates[a].id < candidates[b].id; });
    const auto s = scores(m, prob_features, candidates);
    std::size_t best = order[0];
    for (std::size_t k = 1; k < order.size(); ++k)
        if (s[order[k]] > s[best]) best = order[k];
    return candidates[best].id;
}

struct SelectorEvaluation {
    double error_s = 0.0;
    double error_t = 0.0;
    double gap = 0.0;
    double margin_loss = 0.0;  // K_gamma over training pairs (ModelA/B only)
};

inline std::vector<Candidate> candidates_from(const std::vector<AlgorithmSpec>& portfolio) {
    std::vector<Candidate> cs;
    cs.reserve(portfolio.size());
    for (const auto& a : portfolio) {
        Candidate c;
        c.id = a.id;
        const auto g = a.predefined_features();
        c.predefined = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
        cs.push_back(std::move(c));
    }
    return cs;
}

inline SelectorEvaluation evaluate(const SelectorModel& m, const Eigen::MatrixXd& features,
                                   const Split& split, const PerformanceMatrix& perf,
                                   const std::vector<AlgorithmSpec>& portfolio) {
    const auto cands = candidates_from(portfolio);
    auto error_on = [&](const std::vector<std::size_t>& idx) {
        if (idx.empty()) return 0.0;
        std::size_t wrong = 0;
        for (std::size_t pi : idx) {
            const int chosen = select(m, features.row(static_cast<Eigen::Index>(pi)).transpose(), cands);
            if (chosen != perf.best_algo[pi]) ++wrong;
        }
        return static_cast<double>(wrong) / static_cast<double>(idx.size());
    };
    SelectorEvaluation ev;
    ev.error_s = error_on(split.train_idx);
    ev.error_t = error_on(split.test_idx);
    ev.gap = ev.error_t - ev.error_s;
    if (m.kind == SelectorKind::ModelA || m.kind == SelectorKind::ModelB) {
        std::size_t violations = 0, total = 0;
        for (std::size_t pi : split.train_idx) {
            const auto s = scores(m, features.row(static_cast<Eigen::Index>(pi)).transpose(), cands);
            for (std::size_t j = 0; j < cands.size(); ++j) {
                const double y = perf.best_algo[pi] == cands[j].id ? 1.0 : -1.0;
                if (y * s[j] < m.bind.gamma_margin) ++violations;
                ++total;
            }
        }
        ev.margin_loss = total ? static_cast<double>(violations) / static_cast<double>(total) : 0.0;
    }
    return ev;
}

// Materialize the embedding layer as the block-diagonal W0 = [PF 0; 0 AF]
// so norm introspection covers ModelA exactly as the bounds expect.
inline Network full_network(const SelectorModel& m) {
    if (m.kind != SelectorKind::ModelA) return m.net;
    Layer l0;
    const Eigen::Index rows = m.pf.rows() + m.af.rows();
    const Eigen::Index cols = m.pf.cols() + m.af.cols();
    l0.W = Eigen::MatrixXd::Zero(rows, cols);
    l0.W.topLeftCorner(m.pf.rows(), m.pf.cols()) = m.pf;
    l0.W.bottomRightCorner(m.af.rows(), m.af.cols()) = m.af;
    l0.b = Eigen::VectorXd::Zero(rows);
    l0.act = Activation::Identity;
    Network full;
    full.layers.push_back(std::move(l0));
    for (const auto& l : m.net.layers) full.layers.push_back(l);
    return full;
}

// sup over training columns of ||PF_i|| + ||AF_j||
inline double sup_pf_af(const SelectorModel& m) {
    if (m.kind != SelectorKind::ModelA) return 0.0;
    double max_pf = 0.0, max_af = 0.0;
    for (Eigen::Index c = 0; c < m.pf.cols(); ++c) max_pf = std::max(max_pf, m.pf.col(c).norm());
    for (Eigen::Index c = 0; c < m.af.cols(); ++c) max_af = std::max(max_af, m.af.col(c).norm());
    return max_pf + max_af;
}

inline Eigen::MatrixXd build_feature_matrix(const std::vector<ProblemInstance>& problems,
                                            const OperatorTable& vocab, int L_max) {
    if (problems.empty()) throw std::invalid_argument("no problems");
    const auto first = encode_features(problems[0], vocab, L_max);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(problems.size()),
                      static_cast<Eigen::Index>(first.size()));
    for (std::size_t i = 0; i < problems.size(); ++i) {
        const auto f = i == 0 ? first : encode_features(problems[i], vocab, L_max);
        X.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    }
    return X;
}

}  // namespace asel
