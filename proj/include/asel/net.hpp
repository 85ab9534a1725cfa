#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "asel/prng.hpp"

// Minimal feed-forward network with 1-Lipschitz activations, reverse-mode
// gradients, and exact norm introspection (per-layer spectral and
// Frobenius norms feeding the bound calculators).

namespace asel {

enum class Activation { Relu, Tanh, Sigmoid, Identity };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "?";
}

inline Activation activation_from_name(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "identity") return Activation::Identity;
    throw std::invalid_argument("unknown activation: " + s);
}

inline double apply_activation(Activation a, double x) {
    switch (a) {
        case Activation::Relu: return x > 0.0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Identity: return x;
    }
    return x;
}

inline double activation_derivative(Activation a, double pre) {
    switch (a) {
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(pre);
            return 1.0 - t * t;
        }
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-pre));
            return s * (1.0 - s);
        }
        case Activation::Identity: return 1.0;
    }
    return 1.0;
}

struct Layer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;
    Activation act = Activation::Identity;
};

struct Network {
    std::vector<Layer> layers;

    int input_dim() const { return static_cast<int>(layers.front().W.cols()); }
    int output_dim() const { return static_cast<int>(layers.back().W.rows()); }

    void validate() const {
        if (layers.empty()) throw std::invalid_argument("network has no layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i].b.size() != layers[i].W.rows())
                throw std::invalid_argument("bias/weight row mismatch");
            if (i > 0 && layers[i].W.cols() != layers[i - 1].W.rows())
                throw std::invalid_argument("adjacent layer dimensions do not chain");
            if (!layers[i].W.allFinite() || !layers[i].b.allFinite())
                throw std::invalid_argument("non-finite network parameters");
        }
    }
};

// uniform(-sqrt(6/(in+out)), +sqrt(6/(in+out))) init, biases zero
inline Network make_network(const std::vector<int>& dims, const std::vector<Activation>& acts,
                            std::uint64_t seed) {
    if (dims.size() < 2 || acts.size() != dims.size() - 1)
        throw std::invalid_argument("make_network: need dims n+1 and acts n");
    Network net;
    Rng rng(derive_seed(seed, 0x11E7ULL));
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        Layer l;
        const int in = dims[k], out = dims[k + 1];
        const double a = std::sqrt(6.0 / (in + out));
        l.W.resize(out, in);
        for (int i = 0; i < out; ++i)
            for (int j = 0; j < in; ++j) l.W(i, j) = rng.uniform(-a, a);
        l.b = Eigen::VectorXd::Zero(out);
        l.act = acts[k];
        net.layers.push_back(std::move(l));
    }
    return net;
}

inline Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
    if (x.size() != net.input_dim()) throw std::invalid_argument("forward: input shape mismatch");
    Eigen::VectorXd h = x;
    for (const auto& l : net.layers) {
        Eigen::VectorXd z = l.W * h + l.b;
        h = z.unaryExpr([&](double v) { return apply_activation(l.act, v); });
    }
    return h;
}

// columns = samples
inline Eigen::MatrixXd forward_batch(const Network& net, const Eigen::MatrixXd& X) {
    Eigen::MatrixXd h = X;
    for (const auto& l : net.layers) {
        Eigen::MatrixXd z = (l.W * h).colwise() + l.b;
        h = z.unaryExpr([&](double v) { return apply_activation(l.act, v); });
    }
    return h;
}

struct Gradients {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;
    Eigen::VectorXd dx;  // gradient w.r.t. the network input
};

// Exact reverse-mode gradients of forward(net, x) contracted with
// dloss_dout.
inline Gradients backward(const Network& net, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& dloss_dout) {
    if (x.size() != net.input_dim() || dloss_dout.size() != net.output_dim())
        throw std::invalid_argument("backward: shape mismatch");
    const std::size_t L = net.layers.size();
    std::vector<Eigen::VectorXd> inputs(L), pre(L);
    Eigen::VectorXd h = x;
    for (std::size_t k = 0; k < L; ++k) {
        inputs[k] = h;
        pre[k] = net.layers[k].W * h + net.layers[k].b;
        h = pre[k].unaryExpr([&](double v) { return apply_activation(net.layers[k].act, v); });
    }
    Gradients g;
    g.dW.resize(L);
    g.db.resize(L);
    Eigen::VectorXd delta = dloss_dout;
    for (std::size_t k = L; k-- > 0;) {
        const auto& l = net.layers[k];
        Eigen::VectorXd dz =
            delta.cwiseProduct(pre[k].unaryExpr([&](double v) { return activation_derivative(l.act, v); }));
        g.dW[k] = dz * inputs[k].transpose();
        g.db[k] = dz;
        delta = l.W.transpose() * dz;
    }
    g.dx = delta;
    return g;
}

struct SpectralNormResult {
    double value = 0.0;
    bool converged = false;
};

// Power iteration on W^T W with a fixed pseudo-random start vector.
inline SpectralNormResult spectral_norm_full(const Eigen::MatrixXd& W, int iters = 100,
                                             double tol = 1e-6) {
    if (W.size() == 0) throw std::invalid_argument("spectral_norm: empty matrix");
    if (W.cwiseAbs().maxCoeff() == 0.0) return {0.0, true};
    Rng rng(0x5eedULL);
    Eigen::VectorXd v(W.cols());
    for (int i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
    v.normalize();
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd u = W * v;
        const double s = u.norm();
        if (s == 0.0) {  // start vector in the null space; reseed
            for (int i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
            v.normalize();
            continue;
        }
        v = W.transpose() * u;
        v /= v.norm();
        if (std::fabs(s - sigma) <= tol * std::max(1.0, s)) return {s, true};
        sigma = s;
    }
    return {sigma, false};
}

inline double spectral_norm(const Eigen::MatrixXd& W, int iters = 100, double tol = 1e-6) {
    return spectral_norm_full(W, iters, tol).value;
}

struct NormReport {
    std::vector<double> spectral;   // per layer, sigma_max
    std::vector<double> frobenius;  // per layer
    double lipschitz = 1.0;         // product of spectral norms (layer 0 excluded if W0)
    double frob_product = 1.0;      // product of Frobenius norms (same exclusion)
    double w0_spectral = 0.0;       // only set when first_layer_is_W0
    int layer_count = 0;
};

// Biases are not part of any norm product; the bounds are stated over
// weight matrices only.
inline NormReport norms(const Network& net, bool first_layer_is_W0 = false) {
    net.validate();
    NormReport r;
    r.layer_count = static_cast<int>(net.layers.size());
    for (const auto& l : net.layers) {
        r.spectral.push_back(spectral_norm(l.W, 500, 1e-10));
        r.frobenius.push_back(l.W.norm());
    }
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        if (first_layer_is_W0 && k == 0) {
            r.w0_spectral = r.spectral[0];
            continue;
        }
        r.lipschitz *= r.spectral[k];
        r.frob_product *= r.frobenius[k];
    }
    return r;
}

enum class Loss { Bce, Mse, SoftmaxCe };

inline Loss loss_from_name(const std::string& s) {
    if (s == "bce") return Loss::Bce;
    if (s == "mse") return Loss::Mse;
    if (s == "softmax_ce") return Loss::SoftmaxCe;
    throw std::invalid_argument("unknown loss: " + s);
}

struct TrainingDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainData {
    Eigen::MatrixXd X;  // samples x in
    Eigen::MatrixXd Y;  // samples x out (one-hot for softmax_ce, 0/1 for bce)
    Eigen::VectorXd weights;  // optional per-sample weights (empty = all ones)
};

struct TrainOptions {
    Loss loss = Loss::Mse;
    int epochs = 300;
    double lr = 0.05;
    std::uint64_t seed = 0;
    int batch_size = 256;  // <=0: full batch
    double weight_decay = 0.0;  // L2 penalty on weights (not biases)
    // row range [begin, end) of layer 0 whose weights stay untouched
    std::optional<std::pair<int, int>> frozen_rows;
};

namespace detail {

// loss AND dloss/dz for a batch of outputs Z (out x batch); targets out x batch
inline double loss_and_grad(Loss loss, const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Yt,
                            const Eigen::VectorXd& w, Eigen::MatrixXd& dZ) {
    const auto n = Z.cols();
    double total = 0.0, wsum = 0.0;
    dZ.resize(Z.rows(), Z.cols());
    for (Eigen::Index c = 0; c < n; ++c) {
        const double wc = w.size() ? w(c) : 1.0;
        wsum += wc;
        switch (loss) {
            case Loss::Mse: {
                Eigen::VectorXd d = Z.col(c) - Yt.col(c);
                total += wc * 0.5 * d.squaredNorm();
                dZ.col(c) = wc * d;
                break;
            }
            case Loss::Bce: {
                const double s = 1.0 / (1.0 + std::exp(-Z(0, c)));
                const double y = Yt(0, c);
                const double eps = 1e-12;
                total += -wc * (y * std::log(s + eps) + (1.0 - y) * std::log(1.0 - s + eps));
                dZ(0, c) = wc * (s - y);
                break;
            }
            case Loss::SoftmaxCe: {
                Eigen::VectorXd z = Z.col(c);
                const double m = z.maxCoeff();
                Eigen::VectorXd e = (z.array() - m).exp();
                const double sum = e.sum();
                Eigen::VectorXd p = e / sum;
                double ce = 0.0;
                for (Eigen::Index k = 0; k < z.size(); ++k)
                    if (Yt(k, c) > 0.0) ce -= Yt(k, c) * std::log(p(k) + 1e-12);
                total += wc * ce;
                dZ.col(c) = wc * (p - Yt.col(c));
                break;
            }
        }
    }
    dZ /= wsum > 0.0 ? wsum : 1.0;
    return total / (wsum > 0.0 ? wsum : 1.0);
}

}  // namespace detail

struct TrainResult {
    std::vector<double> loss_curve;  // mean loss per epoch
};

// Plain SGD. The output layer is treated as pre-activation for Bce and
// SoftmaxCe (its activation must be Identity); Mse uses the activated
// output.
inline TrainResult train(Network& net, const TrainData& data, const TrainOptions& opt) {
    net.validate();
    if (data.X.rows() == 0) throw std::invalid_argument("train: empty dataset");
    if (data.X.cols() != net.input_dim()) throw std::invalid_argument("train: input dim mismatch");
    const Eigen::Index n = data.X.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(derive_seed(opt.seed, 0x7247ULL));

    const std::size_t L = net.layers.size();
    TrainResult res;
    const Eigen::Index bs = opt.batch_size > 0 ? std::min<Eigen::Index>(opt.batch_size, n) : n;

    std::vector<Eigen::MatrixXd> act(L + 1), pre(L);
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        for (std::size_t i = static_cast<std::size_t>(n); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        double epoch_loss = 0.0;
        Eigen::Index batches = 0;
        for (Eigen::Index off = 0; off < n; off += bs) {
            const Eigen::Index m = std::min(bs, n - off);
            Eigen::MatrixXd X(net.input_dim(), m), Yt(data.Y.cols(), m);
            Eigen::VectorXd w;
            if (data.weights.size()) w.resize(m);
            for (Eigen::Index c = 0; c < m; ++c) {
                const Eigen::Index r = order[static_cast<std::size_t>(off + c)];
                X.col(c) = data.X.row(r).transpose();
                Yt.col(c) = data.Y.row(r).transpose();
                if (w.size()) w(c) = data.weights(r);
            }
            // forward with cached pre-activations
            act[0] = X;
            for (std::size_t k = 0; k < L; ++k) {
                const auto& l = net.layers[k];
                pre[k] = (l.W * act[k]).colwise() + l.b;
                act[k + 1] = pre[k].unaryExpr(
                    [&](double v) { return apply_activation(l.act, v); });
            }
            const bool use_pre =
                (opt.loss == Loss::Bce || opt.loss == Loss::SoftmaxCe);
            Eigen::MatrixXd dZ;
            const double batch_loss = detail::loss_and_grad(
                opt.loss, use_pre ? pre[L - 1] : act[L], Yt, w, dZ);
            if (!std::isfinite(batch_loss))
                throw TrainingDivergence("training loss diverged (non-finite)");
            epoch_loss += batch_loss;
            ++batches;
            // backward
            Eigen::MatrixXd delta = dZ;
            if (!use_pre)
                delta = delta.cwiseProduct(pre[L - 1].unaryExpr([&](double v) {
                    return activation_derivative(net.layers[L - 1].act, v);
                }));
            for (std::size_t k = L; k-- > 0;) {
                auto& l = net.layers[k];
                Eigen::MatrixXd dW = delta * act[k].transpose();
                if (opt.weight_decay > 0.0) dW.noalias() += opt.weight_decay * l.W;
                Eigen::VectorXd db = delta.rowwise().sum();
                if (k > 0) {
                    Eigen::MatrixXd back = l.W.transpose() * delta;
                    delta = back.cwiseProduct(pre[k - 1].unaryExpr([&](double v) {
                        return activation_derivative(net.layers[k - 1].act, v);
                    }));
                }
                if (k == 0 && opt.frozen_rows) {
                    const auto [rb, re] = *opt.frozen_rows;
                    dW.middleRows(rb, re - rb).setZero();
                    db.segment(rb, re - rb).setZero();
                }
                l.W.noalias() -= opt.lr * dW;
                l.b.noalias() -= opt.lr * db;
            }
        }
        res.loss_curve.push_back(epoch_loss / static_cast<double>(batches));
    }
    return res;
}

}  // namespace asel
