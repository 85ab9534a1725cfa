// asel — per-instance algorithm selection lab.
// Pipelines: gen -> label -> split -> train -> eval -> bounds, plus
// divergence, experiment sweeps, and SVG plotting of results.csv.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "asel/experiments.hpp"
#include "asel/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace asel;

namespace {

struct CommonArgs {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = ".";
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool config_required = true) {
    auto* copt = cmd->add_option("--config", a.config, "JSON config file");
    if (config_required) copt->required();
    cmd->add_option("--seed", a.seed, "master seed")->each([&](const std::string&) {
        a.seed_set = true;
    });
    cmd->add_option("--out", a.out, "output directory");
    cmd->add_option("--jobs", a.jobs, "parallelism degree (never affects results)");
}

json load_config(const CommonArgs& a) {
    return json::parse(io::read_file(a.config));
}

std::uint64_t master_seed(const CommonArgs& a, const json& cfg) {
    if (a.seed_set) return a.seed;
    return cfg.value("seed", 0ULL);
}

OperatorTable table_from_config(const json& cfg) {
    if (cfg.contains("operator_table")) return io::operator_table_from_json(cfg.at("operator_table"));
    return default_operator_table();
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    c.scenario = j.value("scenario", c.scenario);
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::vector<double>>();
    c.n_seeds = j.value("n_seeds", c.n_seeds);
    c.master_seed = j.value("seed", c.master_seed);
    c.dim = j.value("dim", c.dim);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.l_max = j.value("l_max", c.l_max);
    c.n_problems = j.value("n_problems", c.n_problems);
    c.n_algos = j.value("n_algos", c.n_algos);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.n_runs = j.value("n_runs", c.n_runs);
    c.base_population = j.value("base_population", c.base_population);
    c.base_iterations = j.value("base_iterations", c.base_iterations);
    c.width_multiplier = j.value("width_multiplier", c.width_multiplier);
    c.fit.epochs = j.value("epochs", c.fit.epochs);
    c.fit.lr = j.value("lr", c.fit.lr);
    c.fit.batch_size = j.value("batch_size", c.fit.batch_size);
    c.shift_fraction = j.value("shift_fraction", c.shift_fraction);
    c.shift_scale = j.value("shift_scale", c.shift_scale);
    c.universe_size = j.value("universe_size", c.universe_size);
    c.smoothing_eps = j.value("smoothing_eps", c.smoothing_eps);
    c.chi2_mc_n = j.value("chi2_mc_n", c.chi2_mc_n);
    return c;
}

int cmd_gen(const CommonArgs& a) {
    const json cfg = load_config(a);
    const auto table = table_from_config(cfg);
    const int n = cfg.value("n_problems", 100);
    const int dim = cfg.value("dim", 2);
    const int max_depth = cfg.value("max_depth", 5);
    const std::uint64_t seed = master_seed(a, cfg);
    std::vector<ProblemInstance> ps;
    for (int i = 0; i < n; ++i) {
        auto p = generate_problem(table, dim, max_depth, derive_seed(seed, 0x9E0BULL, i));
        p.id = i;
        ps.push_back(std::move(p));
    }
    const fs::path out = fs::path(a.out) / "problems.jsonl";
    io::write_file(out, io::problems_to_jsonl(ps));
    io::append_manifest(out, cfg.dump(), seed, {a.config});
    std::cout << "wrote " << out.string() << " (" << n << " problems)\n";
    return 0;
}

int cmd_label(const CommonArgs& a) {
    const json cfg = load_config(a);
    const std::uint64_t seed = master_seed(a, cfg);
    const auto problems = io::problems_from_jsonl(io::read_file(cfg.at("problems")));
    std::vector<AlgorithmSpec> port;
    if (cfg.contains("portfolio")) {
        port = io::portfolio_from_json(io::read_file(cfg.at("portfolio")));
    } else {
        port = make_portfolio(cfg.value("n_algos", 10), derive_seed(seed, 0xA160ULL),
                              cfg.value("base_population", 30), cfg.value("base_iterations", 200));
        const fs::path pp = fs::path(a.out) / "portfolio.json";
        io::write_file(pp, io::portfolio_to_json(port));
        io::append_manifest(pp, cfg.dump(), seed, {a.config});
    }
    const auto perf = label(problems, port, cfg.value("n_runs", 20),
                            derive_seed(seed, 0x1ABE1ULL), a.jobs);
    const fs::path perf_path = fs::path(a.out) / "perf.csv";
    const fs::path labels_path = fs::path(a.out) / "labels.csv";
    io::write_file(perf_path, io::perf_to_csv(perf));
    io::write_file(labels_path, io::labels_to_csv(perf));
    io::append_manifest(perf_path, cfg.dump(), seed, {a.config});
    io::append_manifest(labels_path, cfg.dump(), seed, {a.config});
    std::cout << "wrote " << perf_path.string() << " and " << labels_path.string() << "\n";
    return 0;
}

int cmd_split(const CommonArgs& a) {
    const json cfg = load_config(a);
    const std::uint64_t seed = master_seed(a, cfg);
    const auto problems = io::problems_from_jsonl(io::read_file(cfg.at("problems")));
    const auto sp = split(problems, cfg.value("algo_count", 10),
                          cfg.value("test_fraction", 0.2), derive_seed(seed, 0x5F17ULL));
    json j;
    j["train_idx"] = sp.train_idx;
    j["test_idx"] = sp.test_idx;
    j["algo_count"] = sp.algo_count;
    const fs::path out = fs::path(a.out) / "split.json";
    io::write_file(out, j.dump(2) + "\n");
    io::append_manifest(out, cfg.dump(), seed, {a.config});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

Split split_from_json(const json& j) {
    Split sp;
    sp.train_idx = j.at("train_idx").get<std::vector<std::size_t>>();
    sp.test_idx = j.at("test_idx").get<std::vector<std::size_t>>();
    sp.algo_count = j.at("algo_count");
    return sp;
}

int cmd_train(const CommonArgs& a) {
    const json cfg = load_config(a);
    const std::uint64_t seed = master_seed(a, cfg);
    const auto problems = io::problems_from_jsonl(io::read_file(cfg.at("problems")));
    const auto perf = io::perf_from_csv(io::read_file(cfg.at("perf")));
    const auto port = io::portfolio_from_json(io::read_file(cfg.at("portfolio")));
    const auto sp = split_from_json(json::parse(io::read_file(cfg.at("split"))));
    const auto table = table_from_config(cfg);
    const int l_max = cfg.value("l_max", 32);
    const auto features = build_feature_matrix(problems, table, l_max);

    DataBindings bind;
    bind.feature_len = static_cast<int>(features.cols());
    bind.algo_count = static_cast<int>(perf.algo_count());
    const auto kind = selector_kind_from_name(cfg.value("model", "model_b"));
    SelectorModel m = build_selector(kind, bind, cfg.value("width_multiplier", 1.0),
                                     derive_seed(seed, 0xB01DULL));
    FitOptions fo;
    fo.epochs = cfg.value("epochs", 40);
    fo.lr = cfg.value("lr", 0.05);
    fo.batch_size = cfg.value("batch_size", 256);
    fo.seed = derive_seed(seed, 0xF17ULL);
    fit(m, features, sp, perf, port, fo);
    const fs::path out = fs::path(a.out) / "model.json";
    io::write_file(out, io::selector_to_json(m));
    io::append_manifest(out, cfg.dump(), seed, {a.config});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_eval(const CommonArgs& a) {
    const json cfg = load_config(a);
    const std::uint64_t seed = master_seed(a, cfg);
    const auto problems = io::problems_from_jsonl(io::read_file(cfg.at("problems")));
    const auto perf = io::perf_from_csv(io::read_file(cfg.at("perf")));
    const auto port = io::portfolio_from_json(io::read_file(cfg.at("portfolio")));
    const auto sp = split_from_json(json::parse(io::read_file(cfg.at("split"))));
    const auto m = io::selector_from_json(io::read_file(cfg.at("model")));
    const auto table = table_from_config(cfg);
    const auto features = build_feature_matrix(problems, table, cfg.value("l_max", 32));
    const auto ev = evaluate(m, features, sp, perf, port);
    json j;
    j["error_S"] = ev.error_s;
    j["error_T"] = ev.error_t;
    j["gap"] = ev.gap;
    j["margin_loss"] = ev.margin_loss;
    const fs::path out = fs::path(a.out) / "eval.json";
    io::write_file(out, j.dump(2) + "\n");
    io::append_manifest(out, cfg.dump(), seed, {a.config});
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_bounds(const CommonArgs& a) {
    const json cfg = load_config(a);
    BoundInputs in;
    in.s_problems = cfg.at("s_problems");
    in.s_algos = cfg.at("s_algos");
    in.t_problems = cfg.at("t_problems");
    in.t_algos = cfg.at("t_algos");
    in.eta = cfg.value("eta", static_cast<double>(in.t_problems) /
                                  static_cast<double>(in.s_problems));
    in.delta = cfg.value("delta", 0.05);
    in.gamma_loss = cfg.value("gamma_loss", 1.0);
    in.gamma_margin = cfg.value("gamma_margin", 0.1);
    in.norm.lipschitz = cfg.value("lipschitz", 1.0);
    in.norm.frob_product = cfg.value("frob_product", 1.0);
    in.norm.w0_spectral = cfg.value("w0_spectral", 1.0);
    in.norm.layer_count = cfg.value("layer_count", 1);
    in.sum_sq_norms = cfg.value("sum_sq_norms", 0.0);
    in.max_sq_norm = cfg.value("max_sq_norm", 0.0);
    in.sup_pf_af = cfg.value("sup_pf_af", 0.0);
    in.chi2 = cfg.value("chi2", 0.0);
    const double error_s = cfg.value("error_S", 0.0);
    if (in.eta >= 1.0) {
        std::cerr << "invalid bound inputs: partition ratio eta = |T_P|/|S_P| must be < 1 "
                     "(training set must be larger than the test set); got eta = "
                  << in.eta << "\n";
        return 1;
    }
    std::vector<BoundReport> reports = {
        thm1_transductive_complexity(in), cor1_transductive_complexity(in),
        thm2_transductive_bound(in, error_s), cor2_bounds(in, error_s, false),
        cor2_bounds(in, error_s, true), thm3_inductive_complexity(in),
        thm4_inductive_bound(in, error_s), cor5_shifted_bound(in, error_s)};
    const fs::path out = fs::path(a.out) / "bounds.json";
    io::write_file(out, io::bounds_to_json(reports));
    io::append_manifest(out, cfg.dump(), master_seed(a, cfg), {a.config});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_divergence(const CommonArgs& a) {
    const json cfg = load_config(a);
    const std::uint64_t seed = master_seed(a, cfg);
    const auto train = io::generative_config_from_json(cfg.at("train"));
    const auto test = io::generative_config_from_json(cfg.at("test"));
    DivergenceReport rep;
    rep.smoothing_eps = cfg.value("smoothing_eps", 0.0);
    rep.n_mc = cfg.value("n_mc", 10000);
    if (!train.algo_weights.empty() || !test.algo_weights.empty())
        rep.chi2_algo = chi2_categorical(test.algo_weights, train.algo_weights, rep.smoothing_eps);
    const auto mc = chi2_problem_mc(test, train, rep.n_mc, derive_seed(seed, 0xC417ULL));
    rep.chi2_problem_mc = mc.supported ? mc.estimate : std::numeric_limits<double>::infinity();
    rep.chi2_problem_stderr = mc.stderr_;
    const fs::path out = fs::path(a.out) / "shift.json";
    io::write_file(out, io::shift_to_json(train, test, rep));
    io::append_manifest(out, cfg.dump(), seed, {a.config});
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_experiment(const CommonArgs& a) {
    const json cfg = load_config(a);
    ExperimentConfig c = experiment_config_from_json(cfg);
    if (a.seed_set) c.master_seed = a.seed;
    c.jobs = a.jobs;
    c.validate();
    const fs::path out = fs::path(a.out) / "results.csv";
    std::vector<ResultRow> existing;
    std::set<RowKey> done;
    if (fs::exists(out)) {
        existing = io::results_from_csv(io::read_file(out));
        for (const auto& r : existing) done.insert(row_key(r));
    }
    fs::create_directories(a.out);
    std::ofstream f(out, std::ios::binary | std::ios::app);
    if (!f) throw std::runtime_error("cannot write " + out.string());
    if (existing.empty()) f << io::kResultsHeader << '\n';
    std::size_t emitted = 0;
    run_experiment(c, done, [&](const ResultRow& r) {
        f << io::result_row_to_csv(r) << '\n';
        f.flush();
        ++emitted;
    });
    io::append_manifest(out, cfg.dump(), c.master_seed, {a.config});
    std::cout << "wrote " << emitted << " new rows to " << out.string() << " ("
              << existing.size() << " resumed)\n";
    return 0;
}

int cmd_plot(const CommonArgs& a) {
    const fs::path in = fs::path(a.out) / "results.csv";
    const auto rows = io::results_from_csv(io::read_file(in));
    const auto summary = summarize(rows);
    std::set<std::string> scenarios;
    for (const auto& r : rows) scenarios.insert(r.scenario);
    for (const auto& sc : scenarios) {
        const fs::path out = fs::path(a.out) / (sc + ".svg");
        io::write_file(out, io::render_plot(summary, sc));
        std::cout << "wrote " << out.string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-instance algorithm selection lab"};
    app.require_subcommand(1);

    CommonArgs gen_a, label_a, split_a, train_a, eval_a, bounds_a, div_a, exp_a, plot_a;
    add_common(app.add_subcommand("gen", "generate problem instances"), gen_a);
    add_common(app.add_subcommand("label", "run the portfolio and label problems"), label_a);
    add_common(app.add_subcommand("split", "train/test split"), split_a);
    add_common(app.add_subcommand("train", "fit one selector model"), train_a);
    add_common(app.add_subcommand("eval", "evaluate a trained selector"), eval_a);
    add_common(app.add_subcommand("bounds", "evaluate all generalization bounds"), bounds_a);
    add_common(app.add_subcommand("divergence", "chi-square divergence between generators"),
               div_a);
    add_common(app.add_subcommand("experiment", "run a sweep scenario"), exp_a);
    add_common(app.add_subcommand("plot", "render results.csv as SVG"), plot_a, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand("gen")) return cmd_gen(gen_a);
        if (app.got_subcommand("label")) return cmd_label(label_a);
        if (app.got_subcommand("split")) return cmd_split(split_a);
        if (app.got_subcommand("train")) return cmd_train(train_a);
        if (app.got_subcommand("eval")) return cmd_eval(eval_a);
        if (app.got_subcommand("bounds")) return cmd_bounds(bounds_a);
        if (app.got_subcommand("divergence")) return cmd_divergence(div_a);
        if (app.got_subcommand("experiment")) return cmd_experiment(exp_a);
        if (app.got_subcommand("plot")) return cmd_plot(plot_a);
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
