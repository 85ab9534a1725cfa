#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "asel/expr.hpp"
#include "asel/prng.hpp"

// Controllable train/test generator pairs and chi-square divergence:
// exact for categorical algorithm distributions, Monte Carlo with exact
// tree likelihood ratios for the problem generator.

namespace asel {

struct GenerativeConfig {
    OperatorTable operator_table;
    std::vector<double> algo_weights;  // selection weights over a universe of spec ids
    int dim = 2;
    int max_depth = 5;

    void validate() const {
        operator_table.validate();
        double s = 0.0;
        for (double w : algo_weights) {
            if (w < 0.0 || !std::isfinite(w))
                throw std::invalid_argument("algorithm weights must be finite and >= 0");
            s += w;
        }
        if (!algo_weights.empty() && !(s > 0.0))
            throw std::invalid_argument("at least one positive algorithm weight required");
    }
};

struct DivergenceReport {
    double chi2_algo = 0.0;        // exact categorical value, may be +inf
    double chi2_problem_mc = 0.0;  // Monte Carlo estimate
    double chi2_problem_stderr = 0.0;
    int n_mc = 0;
    double smoothing_eps = 0.0;
};

// chi^2(p || q) = sum p_i^2 / q_i - 1 over the union support after adding
// eps to every slot of q's universe. +inf when eps = 0 and p puts mass
// where q has none.
inline double chi2_categorical(const std::vector<double>& p, const std::vector<double>& q,
                               double eps = 0.0) {
    if (p.size() != q.size())
        throw std::invalid_argument("chi2_categorical: weight vectors must share a universe");
    double ps = 0.0, qs = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("negative weights");
        ps += p[i];
        qs += q[i] + eps;
    }
    if (!(ps > 0.0) || !(qs > 0.0)) throw std::invalid_argument("weights not normalizable");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i] / ps;
        const double qi = (q[i] + eps) / qs;
        if (pi > 0.0) {
            if (!(qi > 0.0)) return std::numeric_limits<double>::infinity();
            acc += pi * pi / qi;
        }
    }
    return acc - 1.0;
}

struct Chi2McResult {
    double estimate = 0.0;
    double stderr_ = 0.0;
    int n = 0;
    bool supported = true;  // false: P_T support exceeds P_S support
};

namespace detail {

inline bool problem_support_covered(const GenerativeConfig& pt, const GenerativeConfig& ps) {
    if (pt.dim != ps.dim || pt.max_depth != ps.max_depth) return false;
    for (const auto& e : pt.operator_table.entries) {
        if (!(e.weight > 0.0)) continue;
        const int j = ps.operator_table.find(e.name);
        if (j < 0 || !(ps.operator_table.entries[static_cast<std::size_t>(j)].weight > 0.0))
            return false;
    }
    if (pt.operator_table.leaf_var_weight > 0.0 && !(ps.operator_table.leaf_var_weight > 0.0))
        return false;
    if (pt.operator_table.leaf_const_weight > 0.0 && !(ps.operator_table.leaf_const_weight > 0.0))
        return false;
    return true;
}

}  // namespace detail

// Estimates chi^2(P_T || P_S) over the problem generator as the sample
// mean of exp(2 (log P_T - log P_S)) - 1 under draws from P_S. The
// constant-leaf density is identical under both generators, so it cancels
// exactly in the ratio.
inline Chi2McResult chi2_problem_mc(const GenerativeConfig& pt, const GenerativeConfig& ps, int n,
                                    std::uint64_t seed) {
    pt.validate();
    ps.validate();
    if (n < 100) throw std::invalid_argument("chi2_problem_mc: n must be >= 100");
    Chi2McResult r;
    r.n = n;
    if (!detail::problem_support_covered(pt, ps)) {
        r.supported = false;
        r.estimate = std::numeric_limits<double>::infinity();
        return r;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto prob = generate_problem(ps.operator_table, ps.dim, ps.max_depth,
                                           derive_seed(seed, static_cast<std::uint64_t>(k)));
        const double lp_s = prob.gen_logprob;
        const auto lp_t = tree_logprob(prob.tree, pt.operator_table, pt.dim, pt.max_depth);
        const double w = lp_t.supported ? std::exp(2.0 * (lp_t.logprob - lp_s)) : 0.0;
        sum += w;
        sum_sq += w * w;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq / n - mean * mean) * n / (n - 1.0));
    r.estimate = mean - 1.0;
    r.stderr_ = std::sqrt(var / n);
    return r;
}

// Reduce the weight of a seeded-random ceil(fraction * count) subset of
// operators by `scale`.
inline OperatorTable apply_problem_shift(const OperatorTable& table, double fraction, double scale,
                                         std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in [0,1]");
    if (!(scale > 0.0)) throw std::invalid_argument("scale must be > 0");
    OperatorTable out = table;
    const std::size_t n = out.entries.size();
    const std::size_t k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x0F5ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
    for (std::size_t i = 0; i < k; ++i) out.entries[order[i]].weight *= scale;
    return out;
}

// Extend the candidate set with n_new fresh ids from the universe; the
// training ids are untouched.
inline std::vector<int> apply_algo_shift(const std::vector<int>& train_ids, int n_new,
                                         std::size_t universe_size) {
    if (train_ids.size() + static_cast<std::size_t>(n_new) > universe_size)
        throw std::invalid_argument("apply_algo_shift: algorithm universe exhausted");
    std::vector<int> test_ids = train_ids;
    std::vector<bool> used(universe_size, false);
    for (int id : train_ids) used[static_cast<std::size_t>(id)] = true;
    int added = 0;
    for (std::size_t id = 0; id < universe_size && added < n_new; ++id) {
        if (!used[id]) {
            test_ids.push_back(static_cast<int>(id));
            used[id] = true;
            ++added;
        }
    }
    return test_ids;
}

}  // namespace asel
