#include <Eigen/SVD>
#include <catch2/catch_amalgamated.hpp>

#include "asel/net.hpp"

using namespace asel;
using Catch::Approx;

namespace {

Network random_net(Rng& rng, int max_params = 64) {
    // small random architectures staying under max_params weights
    const std::vector<Activation> pool = {Activation::Relu, Activation::Tanh,
                                          Activation::Sigmoid, Activation::Identity};
    for (;;) {
        const int n_layers = 1 + static_cast<int>(rng.uniform_int(3));
        std::vector<int> dims;
        dims.push_back(1 + static_cast<int>(rng.uniform_int(4)));
        for (int k = 0; k < n_layers; ++k) dims.push_back(1 + static_cast<int>(rng.uniform_int(4)));
        int params = 0;
        for (std::size_t k = 0; k + 1 < dims.size(); ++k) params += dims[k] * dims[k + 1];
        if (params > max_params) continue;
        std::vector<Activation> acts;
        for (int k = 0; k < n_layers; ++k) acts.push_back(pool[rng.uniform_int(4)]);
        return make_network(dims, acts, rng.next_u64());
    }
}

}  // namespace

TEST_CASE("identity layer is the identity map", "[net]") {
    Network net;
    Layer l;
    l.W = Eigen::MatrixXd::Identity(3, 3);
    l.b = Eigen::VectorXd::Zero(3);
    l.act = Activation::Identity;
    net.layers.push_back(l);
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;
    CHECK((forward(net, x) - x).norm() == 0.0);
}

TEST_CASE("relu clips negatives", "[net]") {
    CHECK(apply_activation(Activation::Relu, -1.0) == 0.0);
    CHECK(apply_activation(Activation::Relu, 2.0) == 2.0);
}

TEST_CASE("activations are 1-Lipschitz", "[net]") {
    Rng rng(2);
    for (Activation a : {Activation::Relu, Activation::Tanh, Activation::Sigmoid,
                         Activation::Identity}) {
        for (int k = 0; k < 500; ++k) {
            const double x = rng.uniform(-10, 10), y = rng.uniform(-10, 10);
            CHECK(std::abs(apply_activation(a, x) - apply_activation(a, y)) <=
                  std::abs(x - y) + 1e-15);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences", "[net]") {
    Rng rng(1234);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        Network net = random_net(rng);
        Eigen::VectorXd x(net.input_dim());
        for (int i = 0; i < x.size(); ++i) x(i) = rng.uniform(-1, 1);
        Eigen::VectorXd dout(net.output_dim());
        for (int i = 0; i < dout.size(); ++i) dout(i) = rng.uniform(-1, 1);
        // scalar loss = dout . f(x); its gradient wrt f is dout
        const auto g = backward(net, x, dout);
        const double h = 1e-5;
        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            for (int i = 0; i < net.layers[k].W.rows(); ++i)
                for (int j = 0; j < net.layers[k].W.cols(); ++j) {
                    const double save = net.layers[k].W(i, j);
                    net.layers[k].W(i, j) = save + h;
                    const double fp = dout.dot(forward(net, x));
                    net.layers[k].W(i, j) = save - h;
                    const double fm = dout.dot(forward(net, x));
                    net.layers[k].W(i, j) = save;
                    const double fd = (fp - fm) / (2 * h);
                    const double denom = std::max({std::abs(fd), std::abs(g.dW[k](i, j)), 1e-3});
                    worst = std::max(worst, std::abs(fd - g.dW[k](i, j)) / denom);
                }
        }
    }
    CHECK(worst <= 1e-4);
}

TEST_CASE("spectral norm basics", "[net]") {
    CHECK(spectral_norm(Eigen::MatrixXd::Identity(3, 3)) == Approx(1.0).epsilon(1e-9));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = 1.0;
    CHECK(spectral_norm(d, 500, 1e-12) == Approx(3.0).epsilon(1e-9));
    CHECK(spectral_norm(Eigen::MatrixXd::Zero(4, 4)) == 0.0);
}

TEST_CASE("power iteration matches dense SVD", "[net]") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const int r = 1 + static_cast<int>(rng.uniform_int(16));
        const int c = 1 + static_cast<int>(rng.uniform_int(16));
        Eigen::MatrixXd W(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) W(i, j) = rng.normal();
        const double svd = Eigen::JacobiSVD<Eigen::MatrixXd>(W).singularValues()(0);
        const double pw = spectral_norm(W, 500, 1e-10);
        CHECK(std::abs(pw - svd) / std::max(svd, 1e-12) < 1e-6);
        CHECK(pw <= W.norm() + 1e-12);
    }
}

TEST_CASE("norm report on identity layers", "[net]") {
    Network net;
    for (int k = 0; k < 2; ++k) {
        Layer l;
        l.W = Eigen::MatrixXd::Identity(4, 4);
        l.b = Eigen::VectorXd::Zero(4);
        l.act = Activation::Identity;
        net.layers.push_back(l);
    }
    const auto r = norms(net);
    CHECK(r.lipschitz == Approx(1.0).epsilon(1e-9));
    CHECK(r.frob_product == Approx(4.0).epsilon(1e-9));  // (sqrt(4))^2
}

TEST_CASE("norm report on a diagonal layer", "[net]") {
    Network net;
    Layer l;
    l.W = Eigen::MatrixXd::Zero(2, 2);
    l.W(0, 0) = 2.0;
    l.W(1, 1) = 1.0;
    l.b = Eigen::VectorXd::Zero(2);
    l.act = Activation::Identity;
    net.layers.push_back(l);
    const auto r = norms(net);
    CHECK(r.lipschitz == Approx(2.0).epsilon(1e-9));
    CHECK(r.frob_product == Approx(std::sqrt(5.0)).epsilon(1e-9));
}

TEST_CASE("W0 exclusion from products", "[net]") {
    Rng rng(55);
    Network net = make_network({4, 5, 3}, {Activation::Relu, Activation::Identity}, 8);
    const auto all = norms(net, false);
    const auto excl = norms(net, true);
    CHECK(excl.w0_spectral == Approx(all.spectral[0]).epsilon(1e-12));
    CHECK(excl.lipschitz == Approx(all.lipschitz / all.spectral[0]).epsilon(1e-9));
    (void)rng;
}

TEST_CASE("L is at most Gamma_f and bounds the realized Lipschitz ratio", "[net]") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        Network net = random_net(rng);
        const auto r = norms(net);
        CHECK(r.lipschitz <= r.frob_product + 1e-9);
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd x(net.input_dim()), y(net.input_dim());
            for (int i = 0; i < x.size(); ++i) {
                x(i) = rng.uniform(-2, 2);
                y(i) = rng.uniform(-2, 2);
            }
            const double lhs = (forward(net, x) - forward(net, y)).norm();
            CHECK(lhs <= r.lipschitz * (x - y).norm() + 1e-9);
        }
    }
}

TEST_CASE("train with lr 0 is a no-op", "[net]") {
    Network net = make_network({3, 4, 1}, {Activation::Relu, Activation::Identity}, 5);
    const Network before = net;
    TrainData d;
    d.X = Eigen::MatrixXd::Random(10, 3);
    d.Y = Eigen::MatrixXd::Random(10, 1);
    TrainOptions opt;
    opt.loss = Loss::Mse;
    opt.epochs = 5;
    opt.lr = 0.0;
    train(net, d, opt);
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        CHECK((net.layers[k].W - before.layers[k].W).cwiseAbs().maxCoeff() == 0.0);
        CHECK((net.layers[k].b - before.layers[k].b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("frozen rows stay bit-identical", "[net]") {
    Network net = make_network({4, 6, 1}, {Activation::Relu, Activation::Identity}, 6);
    const Eigen::MatrixXd before = net.layers[0].W;
    TrainData d;
    d.X = Eigen::MatrixXd::Random(32, 4);
    d.Y = Eigen::MatrixXd::Random(32, 1);
    TrainOptions opt;
    opt.loss = Loss::Mse;
    opt.epochs = 10;
    opt.lr = 0.05;
    opt.frozen_rows = std::pair<int, int>{0, 3};
    train(net, d, opt);
    CHECK((net.layers[0].W.topRows(3) - before.topRows(3)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((net.layers[0].W.bottomRows(3) - before.bottomRows(3)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("bce solves a linearly separable toy set", "[net]") {
    Rng rng(77);
    const int n = 200;
    TrainData d;
    d.X.resize(n, 2);
    d.Y.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = rng.uniform(-1, 1);
        d.X(i, 1) = rng.uniform(-1, 1);
        d.Y(i, 0) = (d.X(i, 0) + d.X(i, 1) > 0.0) ? 1.0 : 0.0;
    }
    Network net = make_network({2, 8, 1}, {Activation::Relu, Activation::Identity}, 3);
    TrainOptions opt;
    opt.loss = Loss::Bce;
    opt.epochs = 200;
    opt.lr = 0.2;
    opt.batch_size = 0;
    train(net, d, opt);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        const double s = forward(net, d.X.row(i).transpose())(0);
        if ((s > 0.0) == (d.Y(i, 0) > 0.5)) ++correct;
    }
    CHECK(correct >= static_cast<int>(0.99 * n));
}

TEST_CASE("divergence raises an error", "[net]") {
    Network net = make_network({2, 4, 1}, {Activation::Relu, Activation::Identity}, 9);
    TrainData d;
    d.X = Eigen::MatrixXd::Random(16, 2) * 10.0;
    d.Y = Eigen::MatrixXd::Random(16, 1) * 10.0;
    TrainOptions opt;
    opt.loss = Loss::Mse;
    opt.epochs = 500;
    opt.lr = 1e6;
    CHECK_THROWS_AS(train(net, d, opt), TrainingDivergence);
}

TEST_CASE("training is deterministic in the seed", "[net]") {
    TrainData d;
    d.X = Eigen::MatrixXd::Random(64, 3);
    d.Y = Eigen::MatrixXd::Random(64, 2);
    TrainOptions opt;
    opt.loss = Loss::Mse;
    opt.epochs = 20;
    opt.lr = 0.05;
    opt.seed = 11;
    Network a = make_network({3, 8, 2}, {Activation::Tanh, Activation::Identity}, 4);
    Network b = a;
    train(a, d, opt);
    train(b, d, opt);
    for (std::size_t k = 0; k < a.layers.size(); ++k)
        CHECK((a.layers[k].W - b.layers[k].W).cwiseAbs().maxCoeff() == 0.0);
}
