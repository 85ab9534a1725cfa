#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "asel/prng.hpp"

// Random continuous-optimization problems represented as expression trees
// over a weighted operator vocabulary, encoded for learning via their
// Reverse Polish Notation token sequence.

namespace asel {

struct OperatorEntry {
    std::string name;
    int arity = 2;  // 1 or 2
    double weight = 0.0;
};

struct OperatorTable {
    std::vector<OperatorEntry> entries;
    double leaf_var_weight = 1.0;
    double leaf_const_weight = 1.0;

    double operator_weight_sum() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.weight;
        return s;
    }

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < entries.size(); ++i)
            if (entries[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void validate() const {
        bool has_unary = false, has_binary = false;
        for (const auto& e : entries) {
            if (!std::isfinite(e.weight) || e.weight < 0.0)
                throw std::invalid_argument("operator weight must be finite and >= 0");
            if (e.arity == 1) has_unary = true;
            if (e.arity == 2) has_binary = true;
        }
        if (!has_unary || !has_binary)
            throw std::invalid_argument("operator table needs at least one unary and one binary operator");
        if (!(operator_weight_sum() > 0.0))
            throw std::invalid_argument("sum of operator weights must be > 0");
        if (!std::isfinite(leaf_var_weight) || leaf_var_weight < 0.0 ||
            !std::isfinite(leaf_const_weight) || leaf_const_weight < 0.0)
            throw std::invalid_argument("leaf weights must be finite and >= 0");
        if (!(leaf_var_weight + leaf_const_weight > 0.0))
            throw std::invalid_argument("sum of leaf weights must be > 0");
    }

    // vocabulary size for feature encoding: all variables share one symbol,
    // all constants share one symbol
    std::size_t vocab_size() const { return entries.size() + 2; }
};

// GP-style protected operators keep every evaluation finite. Node outputs
// are additionally clamped to +-kValueClamp so chained products cannot
// overflow to Inf.
inline constexpr double kprotect_eps = 1e-9;
inline constexpr double kValueClamp = 1e100;

inline double apply_operator(const std::string& name, double a, double b) {
    double r;
    if (name == "add") r = a + b;
    else if (name == "sub") r = a - b;
    else if (name == "mul") r = a * b;
    else if (name == "div") r = a / (std::fabs(b) + kprotect_eps);
    else if (name == "sin") r = std::sin(a);
    else if (name == "cos") r = std::cos(a);
    else if (name == "log") r = std::log(std::fabs(a) + kprotect_eps);
    else if (name == "exp") r = std::exp(std::min(a, 20.0));
    else if (name == "abs") r = std::fabs(a);
    else if (name == "neg") r = -a;
    else throw std::invalid_argument("unknown operator: " + name);
    return std::clamp(r, -kValueClamp, kValueClamp);
}

inline OperatorTable default_operator_table() {
    OperatorTable t;
    t.entries = {
        {"add", 2, 1.0}, {"sub", 2, 1.0}, {"mul", 2, 1.0}, {"div", 2, 1.0},
        {"sin", 1, 1.0}, {"cos", 1, 1.0}, {"log", 1, 1.0}, {"exp", 1, 1.0},
        {"abs", 1, 1.0}, {"neg", 1, 1.0},
    };
    t.leaf_var_weight = 2.0;
    t.leaf_const_weight = 1.0;
    return t;
}

enum class NodeKind { Operator, Variable, Constant };

struct ExprNode {
    NodeKind kind = NodeKind::Constant;
    std::string op;     // Operator
    int var_index = 0;  // Variable, 0-based, < dim
    double value = 0.0; // Constant, in [-1, 1]
    std::vector<ExprNode> children;
};

struct Token {
    NodeKind kind = NodeKind::Constant;
    std::string op;
    int var_index = 0;
    double value = 0.0;
    int arity = 0;  // Operator only
};

inline void to_rpn_rec(const ExprNode& n, std::vector<Token>& out) {
    for (const auto& c : n.children) to_rpn_rec(c, out);
    Token t;
    t.kind = n.kind;
    t.op = n.op;
    t.var_index = n.var_index;
    t.value = n.value;
    t.arity = static_cast<int>(n.children.size());
    out.push_back(std::move(t));
}

// post-order traversal
inline std::vector<Token> to_rpn(const ExprNode& tree) {
    std::vector<Token> out;
    to_rpn_rec(tree, out);
    return out;
}

inline double eval_rpn(const std::vector<Token>& rpn, const std::vector<double>& x) {
    std::vector<double> stack;
    stack.reserve(rpn.size());
    for (const auto& t : rpn) {
        switch (t.kind) {
            case NodeKind::Variable:
                stack.push_back(x[static_cast<std::size_t>(t.var_index)]);
                break;
            case NodeKind::Constant:
                stack.push_back(t.value);
                break;
            case NodeKind::Operator: {
                if (t.arity == 2) {
                    const double b = stack.back();
                    stack.pop_back();
                    const double a = stack.back();
                    stack.pop_back();
                    stack.push_back(apply_operator(t.op, a, b));
                } else {
                    const double a = stack.back();
                    stack.pop_back();
                    stack.push_back(apply_operator(t.op, a, 0.0));
                }
                break;
            }
        }
    }
    return stack.back();
}

inline double eval_tree(const ExprNode& n, const std::vector<double>& x) {
    switch (n.kind) {
        case NodeKind::Variable: return x[static_cast<std::size_t>(n.var_index)];
        case NodeKind::Constant: return n.value;
        case NodeKind::Operator: {
            const double a = eval_tree(n.children[0], x);
            const double b = n.children.size() > 1 ? eval_tree(n.children[1], x) : 0.0;
            return apply_operator(n.op, a, b);
        }
    }
    return 0.0;
}

struct ProblemInstance {
    int id = 0;
    int dim = 1;
    std::vector<double> lo, hi;
    int max_depth = 2;
    ExprNode tree;
    std::vector<Token> rpn;
    double gen_logprob = 0.0;

    double evaluate(const std::vector<double>& x) const {
        if (x.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("evaluate: dimension mismatch");
        return eval_rpn(rpn, x);
    }
};

namespace detail {

struct GenCtx {
    const OperatorTable* table;
    int dim;
    int max_depth;
    Rng* rng;
    double logprob = 0.0;
};

inline ExprNode gen_leaf(GenCtx& c) {
    ExprNode n;
    const double wv = c.table->leaf_var_weight;
    const double wc = c.table->leaf_const_weight;
    bool pick_var;
    if (wv > 0.0 && wc > 0.0) {
        pick_var = c.rng->uniform() * (wv + wc) < wv;
        c.logprob += std::log((pick_var ? wv : wc) / (wv + wc));
    } else {
        pick_var = wv > 0.0;
    }
    if (pick_var) {
        n.kind = NodeKind::Variable;
        n.var_index = static_cast<int>(c.rng->uniform_int(static_cast<std::uint64_t>(c.dim)));
        c.logprob += -std::log(static_cast<double>(c.dim));
    } else {
        n.kind = NodeKind::Constant;
        n.value = c.rng->uniform(-1.0, 1.0);
        c.logprob += std::log(0.5);  // uniform density on [-1, 1]
    }
    return n;
}

inline ExprNode gen_node(GenCtx& c, int depth) {
    const double w_ops = c.table->operator_weight_sum();
    const double w_leaf = c.table->leaf_var_weight + c.table->leaf_const_weight;
    bool internal;
    if (depth == 1) {
        internal = true;  // root is always an operator node
    } else if (depth >= c.max_depth) {
        internal = false;
    } else {
        internal = c.rng->uniform() * (w_ops + w_leaf) < w_ops;
        c.logprob += std::log((internal ? w_ops : w_leaf) / (w_ops + w_leaf));
    }
    if (!internal) return gen_leaf(c);

    std::vector<double> w(c.table->entries.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = c.table->entries[i].weight;
    const std::size_t op = c.rng->categorical(w);
    c.logprob += std::log(c.table->entries[op].weight / w_ops);

    ExprNode n;
    n.kind = NodeKind::Operator;
    n.op = c.table->entries[op].name;
    const int arity = c.table->entries[op].arity;
    n.children.reserve(static_cast<std::size_t>(arity));
    for (int i = 0; i < arity; ++i) n.children.push_back(gen_node(c, depth + 1));
    return n;
}

}  // namespace detail

inline ProblemInstance generate_problem(const OperatorTable& table, int dim, int max_depth,
                                        std::uint64_t seed, double lo = -5.0, double hi = 5.0) {
    table.validate();
    if (max_depth < 2) throw std::invalid_argument("max_depth must be >= 2");
    if (dim < 1) throw std::invalid_argument("dim must be >= 1");
    Rng rng(derive_seed(seed));
    detail::GenCtx ctx{&table, dim, max_depth, &rng};
    ProblemInstance p;
    p.dim = dim;
    p.max_depth = max_depth;
    p.lo.assign(static_cast<std::size_t>(dim), lo);
    p.hi.assign(static_cast<std::size_t>(dim), hi);
    p.tree = detail::gen_node(ctx, 1);
    p.rpn = to_rpn(p.tree);
    p.gen_logprob = ctx.logprob;
    return p;
}

struct LogProbResult {
    double logprob = 0.0;
    bool supported = true;  // false: tree unreachable under the table
};

namespace detail {

inline void tree_logprob_rec(const ExprNode& n, const OperatorTable& t, int dim, int max_depth,
                             int depth, LogProbResult& r) {
    const double w_ops = t.operator_weight_sum();
    const double w_leaf = t.leaf_var_weight + t.leaf_const_weight;
    const bool internal = n.kind == NodeKind::Operator;
    if (depth == 1) {
        if (!internal) { r.supported = false; return; }
    } else if (depth >= max_depth) {
        if (internal) { r.supported = false; return; }
    } else {
        r.logprob += std::log((internal ? w_ops : w_leaf) / (w_ops + w_leaf));
    }
    if (internal) {
        const int op = t.find(n.op);
        if (op < 0 || !(t.entries[static_cast<std::size_t>(op)].weight > 0.0)) {
            r.supported = false;
            return;
        }
        r.logprob += std::log(t.entries[static_cast<std::size_t>(op)].weight / w_ops);
        for (const auto& c : n.children) {
            tree_logprob_rec(c, t, dim, max_depth, depth + 1, r);
            if (!r.supported) return;
        }
    } else if (n.kind == NodeKind::Variable) {
        if (!(t.leaf_var_weight > 0.0) || n.var_index >= dim) { r.supported = false; return; }
        if (t.leaf_const_weight > 0.0)
            r.logprob += std::log(t.leaf_var_weight / w_leaf);
        r.logprob += -std::log(static_cast<double>(dim));
    } else {
        if (!(t.leaf_const_weight > 0.0)) { r.supported = false; return; }
        if (t.leaf_var_weight > 0.0)
            r.logprob += std::log(t.leaf_const_weight / w_leaf);
        r.logprob += std::log(0.5);
    }
}

}  // namespace detail

// Exact generation log-likelihood of `tree` under `table` with the same
// depth-bounded stopping rule as generate_problem. Unreachable trees get
// a -inf sentinel with supported=false.
inline LogProbResult tree_logprob(const ExprNode& tree, const OperatorTable& table, int dim,
                                  int max_depth) {
    LogProbResult r;
    detail::tree_logprob_rec(tree, table, dim, max_depth, 1, r);
    if (!r.supported) r.logprob = -std::numeric_limits<double>::infinity();
    return r;
}

// Fixed-length encoding: L_max one-hot token columns (zero-padded /
// truncated) followed by the normalized token histogram over the full
// sequence. Vocabulary: [var, const, operators in table order].
inline std::vector<double> encode_features(const ProblemInstance& p, const OperatorTable& vocab,
                                           int L_max) {
    if (L_max < 1) throw std::invalid_argument("L_max must be >= 1");
    const std::size_t V = vocab.vocab_size();
    std::vector<double> f(static_cast<std::size_t>(L_max) * V + V, 0.0);
    auto vocab_index = [&](const Token& t) -> std::size_t {
        if (t.kind == NodeKind::Variable) return 0;
        if (t.kind == NodeKind::Constant) return 1;
        const int i = vocab.find(t.op);
        if (i < 0) throw std::invalid_argument("token operator not in vocabulary: " + t.op);
        return 2 + static_cast<std::size_t>(i);
    };
    for (std::size_t i = 0; i < p.rpn.size() && i < static_cast<std::size_t>(L_max); ++i)
        f[i * V + vocab_index(p.rpn[i])] = 1.0;
    const std::size_t hist_off = static_cast<std::size_t>(L_max) * V;
    for (const auto& t : p.rpn) f[hist_off + vocab_index(t)] += 1.0;
    for (std::size_t j = 0; j < V; ++j) f[hist_off + j] /= static_cast<double>(p.rpn.size());
    return f;
}

// Rebuild the tree from its RPN sequence (stack construction); used when
// loading problems.jsonl.
inline ExprNode tree_from_rpn(const std::vector<Token>& rpn) {
    std::vector<ExprNode> stack;
    for (const auto& t : rpn) {
        ExprNode n;
        n.kind = t.kind;
        n.op = t.op;
        n.var_index = t.var_index;
        n.value = t.value;
        if (t.kind == NodeKind::Operator) {
            n.children.resize(static_cast<std::size_t>(t.arity));
            for (int i = t.arity - 1; i >= 0; --i) {
                n.children[static_cast<std::size_t>(i)] = std::move(stack.back());
                stack.pop_back();
            }
        }
        stack.push_back(std::move(n));
    }
    if (stack.size() != 1) throw std::invalid_argument("malformed RPN sequence");
    return std::move(stack.back());
}

}  // namespace asel
