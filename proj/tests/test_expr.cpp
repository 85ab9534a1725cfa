#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <map>

#include "asel/expr.hpp"

using namespace asel;
using Catch::Approx;

namespace {
OperatorTable plus_only_table() {
    OperatorTable t;
    t.entries = {{"add", 2, 1.0}, {"sin", 1, 0.0}};
    t.leaf_var_weight = 1.0;
    t.leaf_const_weight = 0.0;
    return t;
}
}  // namespace

TEST_CASE("all weight on + and variables forces x1 + x1", "[expr]") {
    const auto p = generate_problem(plus_only_table(), 1, 2, 123);
    REQUIRE(p.rpn.size() == 3);
    CHECK(p.rpn[0].kind == NodeKind::Variable);
    CHECK(p.rpn[0].var_index == 0);
    CHECK(p.rpn[1].kind == NodeKind::Variable);
    CHECK(p.rpn[1].var_index == 0);
    CHECK(p.rpn[2].kind == NodeKind::Operator);
    CHECK(p.rpn[2].op == "add");
    CHECK(p.evaluate({1.5}) == Approx(3.0));
}

TEST_CASE("generation is deterministic", "[expr]") {
    const auto table = default_operator_table();
    const auto a = generate_problem(table, 3, 5, 777);
    const auto b = generate_problem(table, 3, 5, 777);
    REQUIRE(a.rpn.size() == b.rpn.size());
    for (std::size_t i = 0; i < a.rpn.size(); ++i) {
        CHECK(a.rpn[i].kind == b.rpn[i].kind);
        CHECK(a.rpn[i].op == b.rpn[i].op);
        CHECK(a.rpn[i].var_index == b.rpn[i].var_index);
        CHECK(a.rpn[i].value == b.rpn[i].value);
    }
    CHECK(a.gen_logprob == b.gen_logprob);
}

TEST_CASE("operator draw frequencies follow the weights", "[expr]") {
    OperatorTable t;
    t.entries = {{"add", 2, 3.0}, {"sin", 1, 1.0}};
    t.leaf_var_weight = 1.0;
    t.leaf_const_weight = 0.0;
    std::map<std::string, int> counts;
    for (int i = 0; i < 1000; ++i) {
        const auto p = generate_problem(t, 1, 4, derive_seed(99, i));
        for (const auto& tok : p.rpn)
            if (tok.kind == NodeKind::Operator) ++counts[tok.op];
    }
    const double ratio = static_cast<double>(counts["add"]) / counts["sin"];
    CHECK(ratio == Approx(3.0).epsilon(0.05));
}

TEST_CASE("zero total weight is an invalid distribution", "[expr]") {
    OperatorTable t;
    t.entries = {{"add", 2, 0.0}, {"sin", 1, 0.0}};
    t.leaf_var_weight = 1.0;
    t.leaf_const_weight = 0.0;
    CHECK_THROWS_AS(generate_problem(t, 1, 3, 1), std::invalid_argument);
}

TEST_CASE("to_rpn is post-order", "[expr]") {
    // (x1 + x2) * x1 -> [x1, x2, +, x1, *]
    ExprNode x1{NodeKind::Variable, "", 0, 0.0, {}};
    ExprNode x2{NodeKind::Variable, "", 1, 0.0, {}};
    ExprNode plus{NodeKind::Operator, "add", 0, 0.0, {x1, x2}};
    ExprNode mul{NodeKind::Operator, "mul", 0, 0.0, {plus, x1}};
    const auto rpn = to_rpn(mul);
    REQUIRE(rpn.size() == 5);
    CHECK(rpn[0].var_index == 0);
    CHECK(rpn[1].var_index == 1);
    CHECK(rpn[2].op == "add");
    CHECK(rpn[3].var_index == 0);
    CHECK(rpn[4].op == "mul");
}

TEST_CASE("rpn evaluation matches tree evaluation", "[expr]") {
    const auto table = default_operator_table();
    Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const auto p = generate_problem(table, 3, 5, derive_seed(3, k));
        for (int j = 0; j < 10; ++j) {
            std::vector<double> x = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
            const double a = eval_tree(p.tree, x);
            const double b = p.evaluate(x);
            CHECK(a == Approx(b).margin(1e-12));
            CHECK(std::isfinite(b));
        }
    }
}

TEST_CASE("protected operators never blow up", "[expr]") {
    CHECK(apply_operator("div", 1.0, 0.0) == Approx(1.0 / 1e-9));
    CHECK(std::isfinite(apply_operator("log", 0.0, 0.0)));
    CHECK(apply_operator("exp", 1000.0, 0.0) == Approx(std::exp(20.0)));
}

TEST_CASE("gen_logprob is a log probability of the realized tree", "[expr]") {
    const auto table = default_operator_table();
    for (int k = 0; k < 20; ++k) {
        const auto p = generate_problem(table, 2, 4, derive_seed(8, k));
        CHECK(p.gen_logprob <= 0.0);
        const auto lp = tree_logprob(p.tree, table, 2, 4);
        REQUIRE(lp.supported);
        CHECK(lp.logprob == Approx(p.gen_logprob).margin(1e-12));
    }
}

TEST_CASE("tree_logprob flags unsupported trees", "[expr]") {
    const auto p = generate_problem(default_operator_table(), 1, 3, 44);
    OperatorTable t = plus_only_table();  // sin weight 0, no constants
    ExprNode sin_node{NodeKind::Operator, "sin", 0, 0.0,
                      {ExprNode{NodeKind::Variable, "", 0, 0.0, {}}}};
    ExprNode root{NodeKind::Operator, "add", 0, 0.0,
                  {sin_node, ExprNode{NodeKind::Variable, "", 0, 0.0, {}}}};
    const auto lp = tree_logprob(root, t, 1, 3);
    CHECK_FALSE(lp.supported);
    (void)p;
}

TEST_CASE("tree shape frequency matches exp(gen_logprob)", "[expr]") {
    // dim=1, no constants, max_depth=2: the only generation choice at depth 2
    // is operator identity, so P(root op = sin(x1)) is the sin weight share
    OperatorTable t;
    t.entries = {{"add", 2, 1.0}, {"sin", 1, 1.0}};
    t.leaf_var_weight = 1.0;
    t.leaf_const_weight = 0.0;
    int sin_count = 0;
    const int n = 20000;
    double sin_lp = 1.0;
    for (int i = 0; i < n; ++i) {
        const auto p = generate_problem(t, 1, 2, derive_seed(21, i));
        if (p.rpn.back().op == "sin") {
            ++sin_count;
            sin_lp = p.gen_logprob;
        }
    }
    const double freq = static_cast<double>(sin_count) / n;
    CHECK(freq == Approx(std::exp(sin_lp)).margin(0.02));
}

TEST_CASE("feature encoding layout", "[expr]") {
    const auto table = default_operator_table();
    const auto p = generate_problem(table, 2, 4, 3);
    const int V = table.vocab_size();
    const int L = 32;
    const auto f = encode_features(p, table, L);
    REQUIRE(f.size() == static_cast<std::size_t>(L * V + V));
    // each used token slot is one-hot; padding slots are all zero
    for (int pos = 0; pos < L; ++pos) {
        double s = 0.0;
        for (int v = 0; v < V; ++v) s += f[static_cast<std::size_t>(pos * V + v)];
        CHECK(s == (pos < static_cast<int>(p.rpn.size()) ? 1.0 : 0.0));
    }
    // histogram tail sums to 1
    double h = 0.0;
    for (int v = 0; v < V; ++v) h += f[static_cast<std::size_t>(L * V + v)];
    CHECK(h == Approx(1.0));
}

TEST_CASE("tree_from_rpn round trip", "[expr]") {
    const auto table = default_operator_table();
    for (int k = 0; k < 20; ++k) {
        const auto p = generate_problem(table, 2, 5, derive_seed(31, k));
        const auto rebuilt = tree_from_rpn(p.rpn);
        const auto rpn2 = to_rpn(rebuilt);
        REQUIRE(rpn2.size() == p.rpn.size());
        for (std::size_t i = 0; i < rpn2.size(); ++i) {
            CHECK(rpn2[i].kind == p.rpn[i].kind);
            CHECK(rpn2[i].op == p.rpn[i].op);
            CHECK(rpn2[i].var_index == p.rpn[i].var_index);
            CHECK(rpn2[i].value == p.rpn[i].value);
        }
    }
}
