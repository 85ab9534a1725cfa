#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "asel/bounds.hpp"
#include "asel/distshift.hpp"
#include "asel/expr.hpp"
#include "asel/labeling.hpp"
#include "asel/portfolio.hpp"
#include "asel/selectors.hpp"

// Desk-scale sweeps: problem count, algorithm count, new-algorithm shift,
// problem shift under scaling, and model width. One factor at a time,
// per-cell derived seeds, rows emitted through a sink so runs are resumable.

namespace asel {

struct ExperimentConfig {
    std::string scenario = "problem_scale";
    std::vector<double> sweep;
    int n_seeds = 5;
    std::uint64_t master_seed = 42;

    // dataset
    int dim = 2;
    int max_depth = 5;
    int l_max = 32;
    int n_problems = 1000;
    int n_algos = 10;
    double test_fraction = 0.2;

    // labeling budget (deliberately small; labels are means over n_runs)
    int n_runs = 5;
    int base_population = 8;
    int base_iterations = 12;

    // training
    double width_multiplier = 1.0;
    FitOptions fit{.epochs = 20, .lr = 0.05, .batch_size = 256, .seed = 0};

    // shift
    double shift_fraction = 0.3;
    double shift_scale = 0.1;
    int universe_size = 10;
    double smoothing_eps = 0.01;
    int chi2_mc_n = 2000;

    int jobs = 1;

    void validate() const {
        if (sweep.empty()) throw std::invalid_argument("experiment sweep is empty");
        if (n_seeds < 1) throw std::invalid_argument("n_seeds must be >= 1");
        static const std::set<std::string> known = {"problem_scale", "algo_scale", "dist_shift",
                                                    "scale_under_shift", "model_complexity"};
        if (!known.count(scenario)) throw std::invalid_argument("unknown scenario: " + scenario);
    }
};

struct ResultRow {
    std::string scenario;
    double sweep_value = 0.0;
    std::string model;
    std::uint64_t seed = 0;
    double error_s = 0.0;
    double error_t = 0.0;
    double gap = 0.0;
    double bound = std::numeric_limits<double>::quiet_NaN();  // NaN = not applicable
    double chi2 = std::numeric_limits<double>::quiet_NaN();
    bool fallback = false;
    double wall_time_s = 0.0;
};

using RowSink = std::function<void(const ResultRow&)>;
using RowKey = std::tuple<std::string, double, std::string, std::uint64_t>;

inline RowKey row_key(const ResultRow& r) {
    return {r.scenario, r.sweep_value, r.model, r.seed};
}

namespace detail {

constexpr SelectorKind kAllKinds[] = {SelectorKind::ModelA, SelectorKind::ModelB,
                                      SelectorKind::ModelReg, SelectorKind::ModelCla};

inline std::vector<ProblemInstance> gen_problems(const OperatorTable& table, int n, int dim,
                                                 int max_depth, std::uint64_t seed,
                                                 int id_offset = 0) {
    std::vector<ProblemInstance> ps;
    ps.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto p = generate_problem(table, dim, max_depth, derive_seed(seed, 0x9E0BULL, i));
        p.id = id_offset + i;
        ps.push_back(std::move(p));
    }
    return ps;
}

inline double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// bound inputs from a trained model on the realized training features
inline BoundInputs bound_inputs_for(const SelectorModel& m, const Eigen::MatrixXd& features,
                                    const Split& split, std::size_t test_algos, double chi2) {
    BoundInputs in;
    in.s_problems = split.train_idx.size();
    in.t_problems = split.test_idx.size();
    in.s_algos = static_cast<std::size_t>(m.bind.algo_count);
    in.t_algos = test_algos;
    in.eta = split.eta();
    in.gamma_loss = loss_lipschitz(m.kind);
    in.gamma_margin = m.bind.gamma_margin;
    in.norm = norms(full_network(m), m.kind == SelectorKind::ModelA);
    in.sup_pf_af = sup_pf_af(m);
    double sum_sq = 0.0, max_sq = 0.0;
    for (std::size_t pi : split.train_idx) {
        const double sq = features.row(static_cast<Eigen::Index>(pi)).squaredNorm();
        sum_sq += sq;
        max_sq = std::max(max_sq, sq);
    }
    in.sum_sq_norms = sum_sq;
    in.max_sq_norm = max_sq;
    in.chi2 = chi2;
    return in;
}

inline double bound_for(SelectorKind kind, const BoundInputs& in, double error_s, double chi2) {
    BoundReport rep;
    switch (kind) {
        case SelectorKind::ModelA: rep = thm2_transductive_bound(in, error_s); break;
        case SelectorKind::ModelB:
            rep = (std::isfinite(chi2) && chi2 > 0.0) ? cor5_shifted_bound(in, error_s)
                                                      : thm4_inductive_bound(in, error_s);
            break;
        case SelectorKind::ModelReg: rep = cor2_bounds(in, error_s, false); break;
        case SelectorKind::ModelCla: rep = cor2_bounds(in, error_s, true); break;
    }
    return rep.applicable ? rep.value : std::numeric_limits<double>::quiet_NaN();
}

inline double error_rate(const SelectorModel& m, const Eigen::MatrixXd& features,
                         const std::vector<std::size_t>& idx, const std::vector<int>& best,
                         const std::vector<Candidate>& cands) {
    if (idx.empty()) return 0.0;
    std::size_t wrong = 0;
    for (std::size_t pi : idx) {
        const int chosen = select(m, features.row(static_cast<Eigen::Index>(pi)).transpose(), cands);
        if (chosen != best[pi]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(idx.size());
}

struct TrainedSet {
    std::vector<SelectorModel> models;  // indexed like kAllKinds
};

inline TrainedSet train_all(const Eigen::MatrixXd& features, const Split& split,
                            const PerformanceMatrix& perf,
                            const std::vector<AlgorithmSpec>& portfolio,
                            const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainedSet ts;
    DataBindings bind;
    bind.feature_len = static_cast<int>(features.cols());
    bind.algo_count = static_cast<int>(perf.algo_count());
    for (SelectorKind kind : kAllKinds) {
        SelectorModel m =
            build_selector(kind, bind, cfg.width_multiplier,
                           derive_seed(seed, 0xB01DULL, static_cast<int>(kind)));
        FitOptions fo = cfg.fit;
        fo.seed = derive_seed(seed, 0xF17ULL, static_cast<int>(kind));
        fit(m, features, split, perf, portfolio, fo);
        ts.models.push_back(std::move(m));
    }
    return ts;
}

}  // namespace detail

// run one factorial cell sweep; `done` filters already-present rows.
inline void run_experiment(const ExperimentConfig& cfg, const std::set<RowKey>& done,
                           const RowSink& sink) {
    cfg.validate();
    auto emit = [&](ResultRow r) {
        if (!done.count(row_key(r))) sink(r);
    };
    auto skip_all = [&](double sweep_value, std::uint64_t seed) {
        for (SelectorKind kind : detail::kAllKinds)
            if (!done.count(RowKey{cfg.scenario, sweep_value, selector_kind_name(kind), seed}))
                return false;
        return true;
    };
    const OperatorTable base_table = default_operator_table();

    for (int si = 0; si < cfg.n_seeds; ++si) {
        const std::uint64_t seed = derive_seed(cfg.master_seed, 0x5EEDULL, si);

        if (cfg.scenario == "problem_scale") {
            // one dataset per seed at the largest sweep value; each sweep
            // point trains on a nested prefix of the shuffled training side
            // and is evaluated on the shared held-out test set, so the curve
            // isolates the effect of training-set size from between-draw
            // difficulty and test-sample noise
            bool all_done = true;
            for (double sv : cfg.sweep) all_done = all_done && skip_all(sv, seed);
            if (all_done) continue;
            const std::uint64_t cell = derive_seed(seed, 0xCE11ULL);
            const int n_max =
                static_cast<int>(*std::max_element(cfg.sweep.begin(), cfg.sweep.end()));
            const double t0 = detail::now_s();
            auto problems =
                detail::gen_problems(base_table, n_max, cfg.dim, cfg.max_depth, cell);
            auto portfolio = make_portfolio(cfg.n_algos, derive_seed(cell, 0xA160ULL),
                                            cfg.base_population, cfg.base_iterations);
            auto perf = label(problems, portfolio, cfg.n_runs, derive_seed(cell, 0x1ABE1ULL),
                              cfg.jobs);
            const auto sp_full = split(problems, portfolio.size(), cfg.test_fraction,
                                       derive_seed(cell, 0x5F17ULL));
            auto features = build_feature_matrix(problems, base_table, cfg.l_max);
            const double t_shared = detail::now_s() - t0;

            for (double sv : cfg.sweep) {
                if (skip_all(sv, seed)) continue;
                const int n_problems = static_cast<int>(sv);
                Split sp = sp_full;
                const std::size_t n_train = static_cast<std::size_t>(
                    n_problems - std::lround(cfg.test_fraction * n_problems));
                sp.train_idx.resize(std::min(sp.train_idx.size(), n_train));

                const double t1 = detail::now_s();
                auto ts = detail::train_all(features, sp, perf, portfolio, cfg,
                                            derive_seed(cell, 0x7A11ULL, n_problems));
                const double t_cell = detail::now_s() - t1;

                for (std::size_t k = 0; k < ts.models.size(); ++k) {
                    const double t2 = detail::now_s();
                    const auto ev = evaluate(ts.models[k], features, sp, perf, portfolio);
                    ResultRow r;
                    r.scenario = cfg.scenario;
                    r.sweep_value = sv;
                    r.model = selector_kind_name(ts.models[k].kind);
                    r.seed = seed;
                    r.error_s = ev.error_s;
                    r.error_t = ev.error_t;
                    r.gap = ev.gap;
                    auto in = detail::bound_inputs_for(ts.models[k], features, sp,
                                                       portfolio.size(), 0.0);
                    r.bound = detail::bound_for(ts.models[k].kind, in, ev.error_s, 0.0);
                    r.chi2 = 0.0;
                    r.wall_time_s = (t_shared / cfg.sweep.size() + t_cell) / 4.0 +
                                    (detail::now_s() - t2);
                    emit(r);
                }
            }
        } else if (cfg.scenario == "algo_scale" || cfg.scenario == "model_complexity") {
            for (double sv : cfg.sweep) {
                if (skip_all(sv, seed)) continue;
                ExperimentConfig c = cfg;
                int n_algos = cfg.n_algos;
                if (cfg.scenario == "algo_scale") n_algos = static_cast<int>(sv);
                if (cfg.scenario == "model_complexity") c.width_multiplier = sv;
                // one cell seed per master seed: the problem stream and the
                // portfolio are shared (and nested, since both are generated
                // per index) across sweep points, so the sweep measures the
                // swept quantity instead of between-draw difficulty noise
                const std::uint64_t cell = derive_seed(seed, 0xCE11ULL);

                const double t0 = detail::now_s();
                auto problems = detail::gen_problems(base_table, cfg.n_problems, cfg.dim,
                                                     cfg.max_depth, cell);
                auto portfolio = make_portfolio(n_algos, derive_seed(cell, 0xA160ULL),
                                                cfg.base_population, cfg.base_iterations);
                auto perf = label(problems, portfolio, cfg.n_runs, derive_seed(cell, 0x1ABE1ULL),
                                  cfg.jobs);
                auto sp = split(problems, portfolio.size(), cfg.test_fraction,
                                derive_seed(cell, 0x5F17ULL));
                auto features = build_feature_matrix(problems, base_table, cfg.l_max);
                auto ts = detail::train_all(features, sp, perf, portfolio, c, cell);
                const double t_shared = detail::now_s() - t0;

                for (std::size_t k = 0; k < ts.models.size(); ++k) {
                    const double t1 = detail::now_s();
                    const auto ev = evaluate(ts.models[k], features, sp, perf, portfolio);
                    ResultRow r;
                    r.scenario = cfg.scenario;
                    r.sweep_value = sv;
                    r.model = selector_kind_name(ts.models[k].kind);
                    r.seed = seed;
                    r.error_s = ev.error_s;
                    r.error_t = ev.error_t;
                    r.gap = ev.gap;
                    auto in = detail::bound_inputs_for(ts.models[k], features, sp,
                                                       portfolio.size(), 0.0);
                    r.bound = detail::bound_for(ts.models[k].kind, in, ev.error_s, 0.0);
                    r.chi2 = 0.0;
                    r.wall_time_s = t_shared / 4.0 + (detail::now_s() - t1);
                    emit(r);
                }
            }
        } else if (cfg.scenario == "dist_shift") {
            // train once per seed, reuse across n_new (only the test side moves)
            bool all_done = true;
            for (double sv : cfg.sweep) all_done = all_done && skip_all(sv, seed);
            if (all_done) continue;
            const std::uint64_t cell = derive_seed(seed, 0xCE11ULL);
            const double t0 = detail::now_s();
            auto problems =
                detail::gen_problems(base_table, cfg.n_problems, cfg.dim, cfg.max_depth, cell);
            // budget-graded two-family universe: the unseen algorithms
            // extend a hyperparameter axis the training set already
            // varies, which is the regime where an inductive selector
            // can rank algorithms it has never observed
            auto universe = make_shift_universe(cfg.universe_size, cfg.base_population,
                                                cfg.base_iterations);
            std::vector<AlgorithmSpec> train_port(universe.begin(),
                                                  universe.begin() + cfg.n_algos);
            auto perf = label(problems, train_port, cfg.n_runs, derive_seed(cell, 0x1ABE1ULL),
                              cfg.jobs);
            auto sp = split(problems, train_port.size(), cfg.test_fraction,
                            derive_seed(cell, 0x5F17ULL));
            auto features = build_feature_matrix(problems, base_table, cfg.l_max);
            auto ts = detail::train_all(features, sp, perf, train_port, cfg, cell);
            const double t_shared = detail::now_s() - t0;

            std::vector<int> train_ids;
            for (const auto& a : train_port) train_ids.push_back(a.id);
            std::vector<ProblemInstance> test_problems;
            for (std::size_t pi : sp.test_idx) test_problems.push_back(problems[pi]);

            for (double sv : cfg.sweep) {
                if (skip_all(sv, seed)) continue;
                const int n_new = static_cast<int>(sv);
                const auto test_ids = apply_algo_shift(train_ids, n_new, cfg.universe_size);
                std::vector<AlgorithmSpec> test_port;
                for (int id : test_ids) test_port.push_back(universe[static_cast<std::size_t>(id)]);
                auto test_perf = label(test_problems, test_port, cfg.n_runs,
                                       derive_seed(cell, 0x1ABE1ULL), cfg.jobs);
                // uniform algorithm measures; new ids need smoothing to stay finite
                std::vector<double> p_test(test_ids.size(), 1.0), q_train(test_ids.size(), 0.0);
                for (std::size_t j = 0; j < test_ids.size(); ++j)
                    if (std::find(train_ids.begin(), train_ids.end(), test_ids[j]) !=
                        train_ids.end())
                        q_train[j] = 1.0;
                const double chi2 = chi2_categorical(p_test, q_train, cfg.smoothing_eps);

                const auto all_cands = candidates_from(test_port);
                std::vector<Candidate> known_cands;
                for (const auto& c : all_cands)
                    if (std::find(train_ids.begin(), train_ids.end(), c.id) != train_ids.end())
                        known_cands.push_back(c);

                std::vector<std::size_t> test_local(test_problems.size());
                for (std::size_t i = 0; i < test_local.size(); ++i) test_local[i] = i;
                Eigen::MatrixXd test_features(
                    static_cast<Eigen::Index>(test_problems.size()), features.cols());
                for (std::size_t i = 0; i < test_problems.size(); ++i)
                    test_features.row(static_cast<Eigen::Index>(i)) =
                        features.row(static_cast<Eigen::Index>(sp.test_idx[i]));

                for (std::size_t k = 0; k < ts.models.size(); ++k) {
                    const double t1 = detail::now_s();
                    const auto& m = ts.models[k];
                    const bool restricted = m.kind != SelectorKind::ModelB;
                    const auto& cands = restricted ? known_cands : all_cands;
                    ResultRow r;
                    r.scenario = cfg.scenario;
                    r.sweep_value = sv;
                    r.model = selector_kind_name(m.kind);
                    r.seed = seed;
                    r.error_s = detail::error_rate(m, features, sp.train_idx, perf.best_algo,
                                                   candidates_from(train_port));
                    r.error_t = detail::error_rate(m, test_features, test_local,
                                                   test_perf.best_algo, cands);
                    r.gap = r.error_t - r.error_s;
                    r.chi2 = chi2;
                    auto in = detail::bound_inputs_for(m, features, sp, test_port.size(), chi2);
                    r.bound = detail::bound_for(m.kind, in, r.error_s, chi2);
                    r.fallback = restricted && n_new > 0;
                    r.wall_time_s = t_shared / (4.0 * cfg.sweep.size()) + (detail::now_s() - t1);
                    emit(r);
                }
            }
        } else {  // scale_under_shift
            const OperatorTable shifted = apply_problem_shift(
                base_table, cfg.shift_fraction, cfg.shift_scale, derive_seed(seed, 0x5417ULL));
            GenerativeConfig gs{base_table, {}, cfg.dim, cfg.max_depth};
            GenerativeConfig gt{shifted, {}, cfg.dim, cfg.max_depth};
            for (double sv : cfg.sweep) {
                if (skip_all(sv, seed)) continue;
                const int n_problems = static_cast<int>(sv);
                const std::uint64_t cell = derive_seed(seed, 0xCE11ULL, static_cast<int>(sv));
                const double t0 = detail::now_s();
                const int n_test =
                    std::max(1, static_cast<int>(std::floor(cfg.test_fraction * n_problems)));
                auto problems =
                    detail::gen_problems(base_table, n_problems, cfg.dim, cfg.max_depth, cell);
                auto test_extra = detail::gen_problems(shifted, n_test, cfg.dim, cfg.max_depth,
                                                       derive_seed(cell, 0x7E57ULL), n_problems);
                Split sp;
                sp.algo_count = static_cast<std::size_t>(cfg.n_algos);
                for (int i = 0; i < n_problems; ++i) sp.train_idx.push_back(static_cast<std::size_t>(i));
                for (int i = 0; i < n_test; ++i)
                    sp.test_idx.push_back(static_cast<std::size_t>(n_problems + i));
                problems.insert(problems.end(), test_extra.begin(), test_extra.end());

                auto portfolio = make_portfolio(cfg.n_algos, derive_seed(cell, 0xA160ULL),
                                                cfg.base_population, cfg.base_iterations);
                auto perf = label(problems, portfolio, cfg.n_runs,
                                  derive_seed(cell, 0x1ABE1ULL), cfg.jobs);
                auto features = build_feature_matrix(problems, base_table, cfg.l_max);
                auto ts = detail::train_all(features, sp, perf, portfolio, cfg, cell);
                const auto mc = chi2_problem_mc(gt, gs, cfg.chi2_mc_n, derive_seed(cell, 0xC417ULL));
                const double chi2 = mc.supported ? mc.estimate
                                                 : std::numeric_limits<double>::infinity();
                const double t_shared = detail::now_s() - t0;

                for (std::size_t k = 0; k < ts.models.size(); ++k) {
                    const double t1 = detail::now_s();
                    const auto ev = evaluate(ts.models[k], features, sp, perf, portfolio);
                    ResultRow r;
                    r.scenario = cfg.scenario;
                    r.sweep_value = sv;
                    r.model = selector_kind_name(ts.models[k].kind);
                    r.seed = seed;
                    r.error_s = ev.error_s;
                    r.error_t = ev.error_t;
                    r.gap = ev.gap;
                    r.chi2 = chi2;
                    auto in = detail::bound_inputs_for(ts.models[k], features, sp,
                                                       portfolio.size(), chi2);
                    r.bound = detail::bound_for(ts.models[k].kind, in, ev.error_s, chi2);
                    r.wall_time_s = t_shared / 4.0 + (detail::now_s() - t1);
                    emit(r);
                }
            }
        }
    }
}

struct SummaryRow {
    std::string scenario;
    double sweep_value = 0.0;
    std::string model;
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;
    double mean_gap = 0.0;
    double stddev_gap = 0.0;
    std::size_t n = 0;
};

namespace detail {
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}
}  // namespace detail

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman: need >= 2 paired values");
    const auto rx = detail::ranks(x), ry = detail::ranks(y);
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) { mx += rx[i]; my += ry[i]; }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double num = 0, dx = 0, dy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0 || dy == 0) return 0.0;
    return num / std::sqrt(dx * dy);
}

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("summarize: no rows");
    std::map<std::tuple<std::string, double, std::string>, std::vector<const ResultRow*>> groups;
    for (const auto& r : rows) groups[{r.scenario, r.sweep_value, r.model}].push_back(&r);
    std::vector<SummaryRow> out;
    for (const auto& [key, g] : groups) {
        SummaryRow s;
        std::tie(s.scenario, s.sweep_value, s.model) = key;
        s.n = g.size();
        double acc = 0, gap = 0;
        for (const auto* r : g) { acc += 1.0 - r->error_t; gap += r->gap; }
        acc /= static_cast<double>(g.size());
        gap /= static_cast<double>(g.size());
        double vacc = 0, vgap = 0;
        for (const auto* r : g) {
            vacc += (1.0 - r->error_t - acc) * (1.0 - r->error_t - acc);
            vgap += (r->gap - gap) * (r->gap - gap);
        }
        const double denom = g.size() > 1 ? static_cast<double>(g.size() - 1) : 1.0;
        s.mean_accuracy = acc;
        s.stddev_accuracy = std::sqrt(vacc / denom);
        s.mean_gap = gap;
        s.stddev_gap = std::sqrt(vgap / denom);
        out.push_back(std::move(s));
    }
    return out;
}

// Spearman rho of mean accuracy against the sweep value, per model
inline std::map<std::string, double> trend_statistics(const std::vector<SummaryRow>& summary) {
    std::map<std::string, std::vector<std::pair<double, double>>> per_model;
    for (const auto& s : summary) per_model[s.model].push_back({s.sweep_value, s.mean_accuracy});
    std::map<std::string, double> rho;
    for (auto& [model, pts] : per_model) {
        std::sort(pts.begin(), pts.end());
        std::vector<double> x, y;
        for (const auto& [sv, acc] : pts) { x.push_back(sv); y.push_back(acc); }
        rho[model] = spearman_rho(x, y);
    }
    return rho;
}

}  // namespace asel
