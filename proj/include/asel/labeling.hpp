#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "asel/parallel.hpp"
#include "asel/portfolio.hpp"

namespace asel {

struct PerformanceMatrix {
    std::vector<int> problem_ids;
    std::vector<int> algo_ids;
    std::vector<std::vector<double>> mean_best;  // |P| x |A|
    int n_runs = 0;
    std::vector<int> best_algo;  // argmin per problem, ties to lowest algo id

    std::size_t problem_count() const { return problem_ids.size(); }
    std::size_t algo_count() const { return algo_ids.size(); }
};

inline void recompute_best(PerformanceMatrix& m) {
    m.best_algo.assign(m.problem_count(), 0);
    for (std::size_t i = 0; i < m.problem_count(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.algo_count(); ++j)
            if (m.mean_best[i][j] < m.mean_best[i][best]) best = j;
        m.best_algo[i] = m.algo_ids[best];
    }
}

// mean-of-best labeling over n_runs seeded runs per (problem, algorithm)
// cell; cell seeds are derived from (master, problem id, algo id, run), so
// the matrix is independent of evaluation order and parallelism degree.
inline PerformanceMatrix label(const std::vector<ProblemInstance>& problems,
                               const std::vector<AlgorithmSpec>& portfolio, int n_runs,
                               std::uint64_t master_seed, int jobs = 1) {
    if (problems.empty() || portfolio.empty())
        throw std::invalid_argument("label: problems and portfolio must be non-empty");
    if (n_runs < 1) throw std::invalid_argument("label: n_runs must be >= 1");
    PerformanceMatrix m;
    m.n_runs = n_runs;
    for (const auto& p : problems) m.problem_ids.push_back(p.id);
    for (const auto& a : portfolio) m.algo_ids.push_back(a.id);
    m.mean_best.assign(problems.size(), std::vector<double>(portfolio.size(), 0.0));
    parallel_for(0, problems.size() * portfolio.size(), jobs, [&](std::size_t cell) {
        const std::size_t i = cell / portfolio.size();
        const std::size_t j = cell % portfolio.size();
        double sum = 0.0;
        for (int r = 0; r < n_runs; ++r) {
            const std::uint64_t s =
                derive_seed(master_seed, static_cast<std::uint64_t>(problems[i].id),
                            static_cast<std::uint64_t>(portfolio[j].id),
                            static_cast<std::uint64_t>(r));
            sum += run(portfolio[j], problems[i], s).best_value;
        }
        m.mean_best[i][j] = sum / n_runs;
    });
    recompute_best(m);
    return m;
}

struct Split {
    std::vector<std::size_t> train_idx;  // indices into the problem list
    std::vector<std::size_t> test_idx;
    std::size_t algo_count = 0;

    double eta() const {
        return static_cast<double>(test_idx.size()) / static_cast<double>(train_idx.size());
    }
    std::size_t s_pairs() const { return train_idx.size() * algo_count; }
    std::size_t t_pairs() const { return test_idx.size() * algo_count; }
};

// Problem-level split. test_fraction < 0.5 keeps the partition ratio
// eta = |T_P|/|S_P| below 1.
inline Split split(const std::vector<ProblemInstance>& problems, std::size_t algo_count,
                   double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 0.5))
        throw std::invalid_argument("test_fraction must be in (0, 0.5)");
    const std::size_t n = problems.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5B117ULL));
    for (std::size_t i = n; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    const std::size_t n_test = static_cast<std::size_t>(std::lround(test_fraction * n));
    Split s;
    s.algo_count = algo_count;
    s.test_idx.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    return s;
}

}  // namespace asel
