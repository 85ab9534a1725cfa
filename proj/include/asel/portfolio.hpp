#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "asel/expr.hpp"
#include "asel/prng.hpp"

// A small family of canonical metaheuristics used both to label problems
// and as the candidate set. Every optimizer consumes randomness per
// iteration only, so runs with a larger iteration budget extend (never
// alter) the evaluation stream of shorter runs.

namespace asel {

enum class AlgoFamily { DE, PSO, GA, SA, RandomSearch };

inline const char* family_name(AlgoFamily f) {
    switch (f) {
        case AlgoFamily::DE: return "DE";
        case AlgoFamily::PSO: return "PSO";
        case AlgoFamily::GA: return "GA";
        case AlgoFamily::SA: return "SA";
        case AlgoFamily::RandomSearch: return "RandomSearch";
    }
    return "?";
}

inline AlgoFamily family_from_name(const std::string& s) {
    if (s == "DE") return AlgoFamily::DE;
    if (s == "PSO") return AlgoFamily::PSO;
    if (s == "GA") return AlgoFamily::GA;
    if (s == "SA") return AlgoFamily::SA;
    if (s == "RandomSearch") return AlgoFamily::RandomSearch;
    throw std::invalid_argument("unknown algorithm family: " + s);
}

struct AlgorithmSpec {
    int id = 0;
    AlgoFamily family = AlgoFamily::RandomSearch;
    int population_size = 1;
    int iterations = 1;
    double mutation_rate = 0.0;
    double crossover_rate = 0.0;
    double inertia_or_cooling = 0.0;  // PSO inertia / SA cooling / RS box decay
    int selection_pressure = 0;       // GA tournament size
    bool elitism = false;

    void validate() const {
        const bool population_based =
            family == AlgoFamily::DE || family == AlgoFamily::PSO || family == AlgoFamily::GA;
        if (population_based && population_size < 4)
            throw std::invalid_argument("population_size must be >= 4 for population-based families");
        if (population_size < 1 || iterations < 1)
            throw std::invalid_argument("population_size and iterations must be >= 1");
    }

    // G = 11: [family one-hot (5)] ++ [log10(pop)/3, mutation, crossover,
    // inertia_or_cooling, selection_pressure/5, elitism]; unused slots 0.
    std::vector<double> predefined_features() const {
        std::vector<double> g(11, 0.0);
        g[static_cast<std::size_t>(family)] = 1.0;
        g[5] = std::log10(static_cast<double>(population_size)) / 3.0;
        g[6] = mutation_rate;
        g[7] = crossover_rate;
        g[8] = inertia_or_cooling;
        g[9] = static_cast<double>(selection_pressure) / 5.0;
        g[10] = elitism ? 1.0 : 0.0;
        return g;
    }
};

struct RunResult {
    double best_value = 0.0;
    std::int64_t evals_used = 0;
};

namespace detail {

struct Budget {
    const ProblemInstance* problem;
    double best = std::numeric_limits<double>::infinity();
    std::int64_t evals = 0;

    double eval(const std::vector<double>& x) {
        const double f = problem->evaluate(x);
        ++evals;
        if (f < best) best = f;
        return f;
    }
};

inline std::vector<double> random_point(const ProblemInstance& p, Rng& rng) {
    std::vector<double> x(static_cast<std::size_t>(p.dim));
    for (int i = 0; i < p.dim; ++i)
        x[static_cast<std::size_t>(i)] =
            rng.uniform(p.lo[static_cast<std::size_t>(i)], p.hi[static_cast<std::size_t>(i)]);
    return x;
}

inline void clamp_to_bounds(std::vector<double>& x, const ProblemInstance& p) {
    for (int i = 0; i < p.dim; ++i) {
        auto k = static_cast<std::size_t>(i);
        x[k] = std::clamp(x[k], p.lo[k], p.hi[k]);
    }
}

inline void run_de(const AlgorithmSpec& a, const ProblemInstance& p, Rng& rng, Budget& b) {
    const std::size_t np = static_cast<std::size_t>(a.population_size);
    std::vector<std::vector<double>> pop(np);
    std::vector<double> fit(np);
    for (std::size_t i = 0; i < np; ++i) {
        pop[i] = random_point(p, rng);
        fit[i] = b.eval(pop[i]);
    }
    const double F = a.mutation_rate;
    const double CR = a.crossover_rate;
    for (int gen = 0; gen < a.iterations; ++gen) {
        for (std::size_t i = 0; i < np; ++i) {
            std::size_t r1 = rng.uniform_int(np), r2 = rng.uniform_int(np), r3 = rng.uniform_int(np);
            std::vector<double> trial = pop[i];
            const std::size_t jrand = rng.uniform_int(static_cast<std::uint64_t>(p.dim));
            for (int j = 0; j < p.dim; ++j) {
                auto k = static_cast<std::size_t>(j);
                if (rng.uniform() < CR || k == jrand)
                    trial[k] = pop[r1][k] + F * (pop[r2][k] - pop[r3][k]);
            }
            clamp_to_bounds(trial, p);
            const double ft = b.eval(trial);
            if (ft <= fit[i]) {
                pop[i] = std::move(trial);
                fit[i] = ft;
            }
        }
    }
}

inline void run_pso(const AlgorithmSpec& a, const ProblemInstance& p, Rng& rng, Budget& b) {
    const std::size_t np = static_cast<std::size_t>(a.population_size);
    const double c1 = 1.49445, c2 = 1.49445;
    std::vector<std::vector<double>> x(np), v(np), pbest(np);
    std::vector<double> pbest_f(np);
    std::vector<double> gbest;
    double gbest_f = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < np; ++i) {
        x[i] = random_point(p, rng);
        v[i].assign(static_cast<std::size_t>(p.dim), 0.0);
        pbest[i] = x[i];
        pbest_f[i] = b.eval(x[i]);
        if (pbest_f[i] < gbest_f) {
            gbest_f = pbest_f[i];
            gbest = x[i];
        }
    }
    for (int it = 0; it < a.iterations; ++it) {
        for (std::size_t i = 0; i < np; ++i) {
            for (int j = 0; j < p.dim; ++j) {
                auto k = static_cast<std::size_t>(j);
                const double vmax = 0.5 * (p.hi[k] - p.lo[k]);
                v[i][k] = a.inertia_or_cooling * v[i][k] +
                          c1 * rng.uniform() * (pbest[i][k] - x[i][k]) +
                          c2 * rng.uniform() * (gbest[k] - x[i][k]);
                v[i][k] = std::clamp(v[i][k], -vmax, vmax);
                x[i][k] += v[i][k];
            }
            clamp_to_bounds(x[i], p);
            const double f = b.eval(x[i]);
            if (f < pbest_f[i]) {
                pbest_f[i] = f;
                pbest[i] = x[i];
                if (f < gbest_f) {
                    gbest_f = f;
                    gbest = x[i];
                }
            }
        }
    }
}

inline void run_ga(const AlgorithmSpec& a, const ProblemInstance& p, Rng& rng, Budget& b) {
    const std::size_t np = static_cast<std::size_t>(a.population_size);
    std::vector<std::vector<double>> pop(np);
    std::vector<double> fit(np);
    for (std::size_t i = 0; i < np; ++i) {
        pop[i] = random_point(p, rng);
        fit[i] = b.eval(pop[i]);
    }
    const std::size_t tsize = static_cast<std::size_t>(std::max(2, a.selection_pressure));
    auto tournament = [&]() {
        std::size_t best = rng.uniform_int(np);
        for (std::size_t t = 1; t < tsize; ++t) {
            const std::size_t c = rng.uniform_int(np);
            if (fit[c] < fit[best]) best = c;
        }
        return best;
    };
    double sigma_scale = 0.1;  // of box width, decays geometrically per generation
    for (int gen = 0; gen < a.iterations; ++gen) {
        std::vector<std::vector<double>> next(np);
        std::vector<double> next_fit(np);
        std::size_t start = 0;
        if (a.elitism) {
            const std::size_t best =
                static_cast<std::size_t>(std::min_element(fit.begin(), fit.end()) - fit.begin());
            next[0] = pop[best];
            next_fit[0] = fit[best];
            start = 1;
        }
        for (std::size_t i = start; i < np; ++i) {
            const std::size_t pa = tournament(), pb = tournament();
            std::vector<double> child(static_cast<std::size_t>(p.dim));
            const bool crossed = rng.uniform() < a.crossover_rate;
            for (int j = 0; j < p.dim; ++j) {
                auto k = static_cast<std::size_t>(j);
                if (crossed) {
                    const double alpha = rng.uniform();
                    child[k] = alpha * pop[pa][k] + (1.0 - alpha) * pop[pb][k];
                } else {
                    child[k] = pop[pa][k];
                }
                if (rng.uniform() < a.mutation_rate)
                    child[k] += rng.normal() * sigma_scale * (p.hi[k] - p.lo[k]);
            }
            clamp_to_bounds(child, p);
            next_fit[i] = b.eval(child);
            next[i] = std::move(child);
        }
        pop = std::move(next);
        fit = std::move(next_fit);
        sigma_scale *= 0.98;
    }
}

inline void run_sa(const AlgorithmSpec& a, const ProblemInstance& p, Rng& rng, Budget& b) {
    std::vector<double> cur = random_point(p, rng);
    double fcur = b.eval(cur);
    double temp = 1.0;
    const double cool = a.inertia_or_cooling;
    for (int it = 0; it < a.iterations; ++it) {
        std::vector<double> cand = cur;
        for (int j = 0; j < p.dim; ++j) {
            auto k = static_cast<std::size_t>(j);
            cand[k] += rng.normal() * temp * 0.5 * (p.hi[k] - p.lo[k]);
        }
        clamp_to_bounds(cand, p);
        const double fc = b.eval(cand);
        if (fc <= fcur || rng.uniform() < std::exp(-(fc - fcur) / std::max(temp, 1e-300))) {
            cur = std::move(cand);
            fcur = fc;
        }
        temp *= cool;
    }
}

// Random search with a geometrically contracting sampling box around the
// incumbent best. Pure uniform sampling cannot reach useful precision in
// even a handful of dimensions within a desk-scale budget.
inline void run_random_search(const AlgorithmSpec& a, const ProblemInstance& p, Rng& rng,
                              Budget& b) {
    std::vector<double> center(static_cast<std::size_t>(p.dim));
    std::vector<double> half(static_cast<std::size_t>(p.dim));
    for (int j = 0; j < p.dim; ++j) {
        auto k = static_cast<std::size_t>(j);
        center[k] = 0.5 * (p.lo[k] + p.hi[k]);
        half[k] = 0.5 * (p.hi[k] - p.lo[k]);
    }
    const double decay = a.inertia_or_cooling > 0.0 ? a.inertia_or_cooling : 0.97;
    double best_f = std::numeric_limits<double>::infinity();
    for (int it = 0; it < a.iterations; ++it) {
        for (int s = 0; s < a.population_size; ++s) {
            std::vector<double> x(static_cast<std::size_t>(p.dim));
            for (int j = 0; j < p.dim; ++j) {
                auto k = static_cast<std::size_t>(j);
                x[k] = rng.uniform(center[k] - half[k], center[k] + half[k]);
            }
            clamp_to_bounds(x, p);
            const double f = b.eval(x);
            if (f < best_f) {
                best_f = f;
                center = std::move(x);
            }
        }
        for (auto& h : half) h *= decay;
    }
}

}  // namespace detail

inline RunResult run(const AlgorithmSpec& algo, const ProblemInstance& problem,
                     std::uint64_t seed) {
    algo.validate();
    for (int i = 0; i < problem.dim; ++i)
        if (!(problem.lo[static_cast<std::size_t>(i)] < problem.hi[static_cast<std::size_t>(i)]))
            throw std::invalid_argument("problem bounds must satisfy lo < hi");
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(algo.id)));
    detail::Budget budget{&problem};
    switch (algo.family) {
        case AlgoFamily::DE: detail::run_de(algo, problem, rng, budget); break;
        case AlgoFamily::PSO: detail::run_pso(algo, problem, rng, budget); break;
        case AlgoFamily::GA: detail::run_ga(algo, problem, rng, budget); break;
        case AlgoFamily::SA: detail::run_sa(algo, problem, rng, budget); break;
        case AlgoFamily::RandomSearch: detail::run_random_search(algo, problem, rng, budget); break;
    }
    return RunResult{budget.best, budget.evals};
}

// n specs cycling through the five families with per-slot jittered
// hyperparameters; deterministic for a given seed.
inline std::vector<AlgorithmSpec> make_portfolio(int n, std::uint64_t seed,
                                                 int base_population = 30,
                                                 int base_iterations = 200) {
    if (n < 1 || n > 64) throw std::invalid_argument("portfolio size must be in [1, 64]");
    std::vector<AlgorithmSpec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 0xA15EC0DEULL));
        AlgorithmSpec a;
        a.id = i;
        a.family = static_cast<AlgoFamily>(i % 5);
        const int pop = std::max(4, static_cast<int>(std::lround(base_population * rng.uniform(0.7, 1.3))));
        switch (a.family) {
            case AlgoFamily::DE:
                a.population_size = pop;
                a.iterations = base_iterations;
                a.mutation_rate = rng.uniform(0.4, 0.9);
                a.crossover_rate = rng.uniform(0.5, 0.95);
                break;
            case AlgoFamily::PSO:
                a.population_size = pop;
                a.iterations = base_iterations;
                a.inertia_or_cooling = rng.uniform(0.4, 0.9);
                break;
            case AlgoFamily::GA:
                a.population_size = pop;
                a.iterations = base_iterations;
                a.mutation_rate = rng.uniform(0.05, 0.3);
                a.crossover_rate = rng.uniform(0.6, 0.95);
                a.selection_pressure = 2 + static_cast<int>(rng.uniform_int(4));
                a.elitism = true;
                break;
            case AlgoFamily::SA: {
                a.population_size = 1;
                a.iterations = base_population * base_iterations;
                // budget-adaptive cooling: land on a jittered final
                // temperature regardless of the iteration count
                const double final_temp = std::exp(rng.uniform(std::log(1e-6), std::log(1e-3)));
                a.inertia_or_cooling = std::pow(final_temp, 1.0 / a.iterations);
                break;
            }
            case AlgoFamily::RandomSearch:
                a.population_size = std::max(1, pop / 6);
                a.iterations = base_iterations * 6;
                a.inertia_or_cooling = rng.uniform(0.95, 0.99);
                break;
        }
        out.push_back(a);
    }
    return out;
}

// Universe for new-algorithm shift studies: two families (DE, PSO)
// whose members differ only in population size, i.e. along a single
// dimension of the shared hyperparameter description. The first five
// slots (the training side) contain within-family budget contrasts, so
// a model that scores algorithms by their description can identify how
// performance responds to budget; the later slots extend the same
// budget axis, so that response carries over to algorithms never seen
// in training. Deterministic by construction.
inline std::vector<AlgorithmSpec> make_shift_universe(int n, int base_population = 8,
                                                      int base_iterations = 12) {
    if (n < 1 || n > 64) throw std::invalid_argument("universe size must be in [1, 64]");
    struct Slot {
        AlgoFamily fam;
        double mult;
    };
    static const Slot fixed[10] = {
        {AlgoFamily::DE, 0.75},  {AlgoFamily::DE, 1.5},  {AlgoFamily::PSO, 0.75},
        {AlgoFamily::PSO, 1.5},  {AlgoFamily::DE, 1.0},  {AlgoFamily::DE, 3.0},
        {AlgoFamily::PSO, 3.0},  {AlgoFamily::PSO, 1.0}, {AlgoFamily::DE, 3.9},
        {AlgoFamily::PSO, 3.9},
    };
    std::vector<AlgorithmSpec> out;
    out.reserve(static_cast<std::size_t>(n));
    double extra_mult = 3.9;
    for (int i = 0; i < n; ++i) {
        AlgoFamily fam;
        double mult;
        if (i < 10) {
            fam = fixed[i].fam;
            mult = fixed[i].mult;
        } else {
            // keep alternating the two families while the budget grows
            fam = (i % 2 == 0) ? AlgoFamily::DE : AlgoFamily::PSO;
            if (i % 2 == 0) extra_mult *= 1.3;
            mult = extra_mult;
        }
        AlgorithmSpec a;
        a.id = i;
        a.family = fam;
        a.population_size =
            std::max(4, static_cast<int>(std::lround(base_population * mult)));
        a.iterations = base_iterations;
        if (fam == AlgoFamily::DE) {
            a.mutation_rate = 0.6;
            a.crossover_rate = 0.9;
        } else {
            a.inertia_or_cooling = 0.7;
        }
        out.push_back(a);
    }
    return out;
}

}  // namespace asel
