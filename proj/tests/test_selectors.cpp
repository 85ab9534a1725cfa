#include <catch2/catch_amalgamated.hpp>

#include "asel/selectors.hpp"

using namespace asel;
using Catch::Approx;

namespace {

struct Dataset {
    std::vector<ProblemInstance> problems;
    std::vector<AlgorithmSpec> portfolio;
    PerformanceMatrix perf;
    Split sp;
    Eigen::MatrixXd features;
    OperatorTable table = default_operator_table();
};

// labeled at tiny metaheuristic budget, enough for interface-level tests
Dataset small_dataset(int n_problems, int n_algos, std::uint64_t seed) {
    Dataset d;
    for (int i = 0; i < n_problems; ++i) {
        auto p = generate_problem(d.table, 2, 4, derive_seed(seed, i));
        p.id = i;
        d.problems.push_back(std::move(p));
    }
    d.portfolio = make_portfolio(n_algos, derive_seed(seed, 901), 6, 5);
    d.perf = label(d.problems, d.portfolio, 2, derive_seed(seed, 902));
    d.sp = split(d.problems, d.portfolio.size(), 0.25, derive_seed(seed, 903));
    d.features = build_feature_matrix(d.problems, d.table, 16);
    return d;
}

DataBindings bindings_of(const Dataset& d) {
    DataBindings b;
    b.feature_len = static_cast<int>(d.features.cols());
    b.algo_count = static_cast<int>(d.perf.algo_count());
    return b;
}

}  // namespace

TEST_CASE("width multiplier controls hidden sizes", "[selectors]") {
    DataBindings b;
    b.feature_len = 10;
    b.algo_count = 4;
    auto m1 = build_selector(SelectorKind::ModelCla, b, 1.0, 1);
    CHECK(m1.net.layers[0].W.rows() == 128);
    auto m05 = build_selector(SelectorKind::ModelCla, b, 0.5, 1);
    CHECK(m05.net.layers[0].W.rows() == 64);
    CHECK(m05.net.layers[1].W.rows() == 64);
    CHECK(m05.net.layers[2].W.rows() == 64);
    CHECK_THROWS_AS(build_selector(SelectorKind::ModelCla, b, 2.5, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_selector(SelectorKind::ModelCla, b, 0.1, 1), std::invalid_argument);
}

TEST_CASE("ModelA materialized W0 is one column per instance", "[selectors]") {
    auto d = small_dataset(40, 5, 11);
    auto m = build_selector(SelectorKind::ModelA, bindings_of(d), 0.25, 2);
    FitOptions fo;
    fo.epochs = 2;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    const auto full = full_network(m);
    CHECK(full.layers[0].W.cols() ==
          static_cast<Eigen::Index>(d.sp.train_idx.size() + d.portfolio.size()));
    // PF block equals the training-problem feature matrix bit-exactly
    for (std::size_t c = 0; c < d.sp.train_idx.size(); ++c)
        CHECK((m.pf.col(static_cast<Eigen::Index>(c)).transpose() -
               d.features.row(static_cast<Eigen::Index>(d.sp.train_idx[c])))
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("single candidate algorithm is always selected", "[selectors]") {
    auto d = small_dataset(30, 1, 21);
    for (auto kind : {SelectorKind::ModelA, SelectorKind::ModelB, SelectorKind::ModelReg,
                      SelectorKind::ModelCla}) {
        auto m = build_selector(kind, bindings_of(d), 0.25, 3);
        FitOptions fo;
        fo.epochs = 2;
        fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
        const auto ev = evaluate(m, d.features, d.sp, d.perf, d.portfolio);
        CHECK(ev.error_s == 0.0);
        CHECK(ev.error_t == 0.0);
        CHECK(ev.gap == 0.0);
    }
}

TEST_CASE("ModelA rejects unseen algorithm ids", "[selectors]") {
    auto d = small_dataset(30, 4, 31);
    auto m = build_selector(SelectorKind::ModelA, bindings_of(d), 0.25, 4);
    FitOptions fo;
    fo.epochs = 2;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    Candidate ghost;
    ghost.id = 999;
    CHECK_THROWS_AS(select(m, d.features.row(0).transpose(), {ghost}), NoEmbeddingError);
}

TEST_CASE("identical predefined features get identical scores; ties go low", "[selectors]") {
    auto d = small_dataset(30, 4, 41);
    auto m = build_selector(SelectorKind::ModelB, bindings_of(d), 0.25, 5);
    FitOptions fo;
    fo.epochs = 3;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    Candidate a, b;
    a.id = 7;
    b.id = 3;
    a.predefined = Eigen::VectorXd::Constant(11, 0.5);
    b.predefined = a.predefined;
    const auto s = scores(m, d.features.row(0).transpose(), {a, b});
    CHECK(s[0] == s[1]);
    CHECK(select(m, d.features.row(0).transpose(), {a, b}) == 3);
}

TEST_CASE("ModelReg selects the argmin of predicted performance", "[selectors]") {
    // constant targets per algorithm: algo 1 is globally best
    Dataset d = small_dataset(60, 3, 51);
    for (auto& row : d.perf.mean_best) row = {5.0, 1.0, 3.0};
    recompute_best(d.perf);
    auto m = build_selector(SelectorKind::ModelReg, bindings_of(d), 0.25, 6);
    FitOptions fo;
    fo.epochs = 60;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    const auto ev = evaluate(m, d.features, d.sp, d.perf, d.portfolio);
    CHECK(ev.error_s == 0.0);
    CHECK(ev.error_t == 0.0);
}

TEST_CASE("selection is invariant to candidate order and monotone transforms", "[selectors]") {
    auto d = small_dataset(40, 5, 61);
    auto m = build_selector(SelectorKind::ModelCla, bindings_of(d), 0.25, 7);
    FitOptions fo;
    fo.epochs = 5;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    auto cands = candidates_from(d.portfolio);
    for (int i = 0; i < 10; ++i) {
        const auto x = d.features.row(i).transpose();
        const int chosen = select(m, x, cands);
        auto shuffled = cands;
        std::rotate(shuffled.begin(), shuffled.begin() + 2, shuffled.end());
        CHECK(select(m, x, shuffled) == chosen);
        // strictly increasing transform of all scores preserves the argmax
        const auto s = scores(m, x, cands);
        std::size_t best = 0;
        for (std::size_t k = 1; k < s.size(); ++k)
            if (3.0 * s[k] + 1.0 > 3.0 * s[best] + 1.0) best = k;
        CHECK(cands[best].id == chosen);
    }
}

TEST_CASE("margin loss follows its definition", "[selectors]") {
    // hand-built ModelB scoring net: score = candidate mutation_rate, so the
    // pair margins are exactly controllable
    Dataset d = small_dataset(4, 3, 71);
    d.sp.train_idx = {0};
    d.sp.test_idx = {1};
    DataBindings b = bindings_of(d);
    b.gamma_margin = 0.1;
    SelectorModel m;
    m.kind = SelectorKind::ModelB;
    m.bind = b;
    Layer l;
    l.W = Eigen::MatrixXd::Zero(1, b.feature_len + 11);
    l.W(0, b.feature_len + 6) = 1.0;  // picks predefined slot 6 = mutation rate
    l.b = Eigen::VectorXd::Zero(1);
    l.act = Activation::Identity;
    m.net.layers.push_back(l);
    m.algo_ids = d.perf.algo_ids;

    d.portfolio[0].mutation_rate = 0.5;    // best algo: margin y*s = 0.5
    d.portfolio[1].mutation_rate = -0.05;  // y=-1: margin 0.05
    d.portfolio[2].mutation_rate = 0.2;    // y=-1: margin -0.2
    for (auto& row : d.perf.mean_best) row = {0.0, 1.0, 2.0};
    recompute_best(d.perf);

    const auto ev = evaluate(m, d.features, d.sp, d.perf, d.portfolio);
    CHECK(ev.margin_loss == Approx(2.0 / 3.0));
}

TEST_CASE("a label-independent model scores 1/|S_A| against random labels", "[selectors]") {
    Dataset d = small_dataset(2000, 10, 81);
    Rng rng(404);
    for (auto& row : d.perf.mean_best) {
        for (auto& v : row) v = 1.0;
        row[rng.uniform_int(row.size())] = 0.0;  // random uniform best algorithm
    }
    recompute_best(d.perf);
    auto m = build_selector(SelectorKind::ModelCla, bindings_of(d), 0.25, 9);  // untrained
    m.algo_ids = d.perf.algo_ids;
    std::vector<std::size_t> all_idx(d.problems.size());
    for (std::size_t i = 0; i < all_idx.size(); ++i) all_idx[i] = i;
    Split sp;
    sp.train_idx = {0};
    sp.test_idx = all_idx;
    sp.algo_count = 10;
    const auto ev = evaluate(m, d.features, sp, d.perf, d.portfolio);
    CHECK(ev.error_t == Approx(0.9).margin(0.03));
}

TEST_CASE("ModelB learns a planted predefined-feature rule", "[selectors]") {
    // best algorithm is decided by the elitism bit alone
    Dataset d = small_dataset(2000, 4, 91);
    for (std::size_t j = 0; j < d.portfolio.size(); ++j)
        d.portfolio[j].elitism = (j == 2);
    for (auto& row : d.perf.mean_best) row = {1.0, 1.0, 0.0, 1.0};
    recompute_best(d.perf);
    auto m = build_selector(SelectorKind::ModelB, bindings_of(d), 0.25, 10);
    FitOptions fo;
    fo.epochs = 8;
    fit(m, d.features, d.sp, d.perf, d.portfolio, fo);
    const auto ev = evaluate(m, d.features, d.sp, d.perf, d.portfolio);
    CHECK(1.0 - ev.error_t >= 0.95);
}

TEST_CASE("loss Lipschitz constants per family", "[selectors]") {
    CHECK(loss_lipschitz(SelectorKind::ModelA) == 0.25);
    CHECK(loss_lipschitz(SelectorKind::ModelB) == 0.25);
    CHECK(loss_lipschitz(SelectorKind::ModelReg) == 6.0);
    CHECK(loss_lipschitz(SelectorKind::ModelCla) == 1.0);
}
