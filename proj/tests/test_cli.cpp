#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>

#include "asel/io.hpp"

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("ASEL_BIN");
    REQUIRE(b != nullptr);
    return b;
}

int run(const std::string& args) {
    const std::string cmd = bin() + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
    fs::path p;
    TempDir() : p(fs::temp_directory_path() / ("asel_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(p);
        fs::create_directories(p);
    }
    ~TempDir() { fs::remove_all(p); }
    std::string operator/(const std::string& name) const { return (p / name).string(); }
};

}  // namespace

TEST_CASE("gen is deterministic and the pipeline runs end to end", "[cli]") {
    TempDir d;
    using asel::io::read_file;
    using asel::io::write_file;

    write_file(d / "gen.json",
               R"({"n_problems": 12, "dim": 2, "max_depth": 4, "seed": 11})");
    REQUIRE(run("gen --config " + (d / "gen.json") + " --out " + d.p.string()) == 0);
    const std::string first = read_file(d / "problems.jsonl");
    REQUIRE(run("gen --config " + (d / "gen.json") + " --out " + d.p.string()) == 0);
    CHECK(read_file(d / "problems.jsonl") == first);
    CHECK(fs::exists(d / "problems.jsonl.manifest.jsonl"));

    write_file(d / "label.json",
               "{\"problems\": \"" + (d / "problems.jsonl") +
                   "\", \"n_algos\": 3, \"n_runs\": 2, \"base_population\": 6, "
                   "\"base_iterations\": 5, \"seed\": 11}");
    REQUIRE(run("label --config " + (d / "label.json") + " --out " + d.p.string()) == 0);
    CHECK(fs::exists(d / "perf.csv"));
    CHECK(fs::exists(d / "labels.csv"));
    CHECK(fs::exists(d / "portfolio.json"));

    write_file(d / "split.json.cfg",
               "{\"problems\": \"" + (d / "problems.jsonl") +
                   "\", \"algo_count\": 3, \"test_fraction\": 0.25, \"seed\": 11}");
    REQUIRE(run("split --config " + (d / "split.json.cfg") + " --out " + d.p.string()) == 0);

    write_file(d / "train.json",
               "{\"problems\": \"" + (d / "problems.jsonl") + "\", \"perf\": \"" +
                   (d / "perf.csv") + "\", \"portfolio\": \"" + (d / "portfolio.json") +
                   "\", \"split\": \"" + (d / "split.json") +
                   "\", \"model\": \"model_b\", \"epochs\": 2, \"l_max\": 16, "
                   "\"width_multiplier\": 0.25, \"seed\": 11}");
    REQUIRE(run("train --config " + (d / "train.json") + " --out " + d.p.string()) == 0);
    CHECK(fs::exists(d / "model.json"));

    write_file(d / "eval.json.cfg",
               "{\"problems\": \"" + (d / "problems.jsonl") + "\", \"perf\": \"" +
                   (d / "perf.csv") + "\", \"portfolio\": \"" + (d / "portfolio.json") +
                   "\", \"split\": \"" + (d / "split.json") + "\", \"model\": \"" +
                   (d / "model.json") + "\", \"l_max\": 16, \"seed\": 11}");
    REQUIRE(run("eval --config " + (d / "eval.json.cfg") + " --out " + d.p.string()) == 0);
    const auto ev = nlohmann::json::parse(read_file(d / "eval.json"));
    CHECK(ev.at("error_T").get<double>() >= 0.0);
    CHECK(ev.at("error_T").get<double>() <= 1.0);
}

TEST_CASE("bounds subcommand validates the partition ratio", "[cli]") {
    TempDir d;
    using asel::io::read_file;
    using asel::io::write_file;

    write_file(d / "ok.json",
               R"({"s_problems": 100, "s_algos": 5, "t_problems": 25, "t_algos": 5,
                   "lipschitz": 2.0, "frob_product": 3.0, "w0_spectral": 1.5,
                   "layer_count": 3, "sum_sq_norms": 50.0, "max_sq_norm": 2.0,
                   "sup_pf_af": 4.0, "chi2": 0.5, "error_S": 0.1})");
    REQUIRE(run("bounds --config " + (d / "ok.json") + " --out " + d.p.string()) == 0);
    const auto j = nlohmann::json::parse(read_file(d / "bounds.json"));
    CHECK(j.size() == 8);
    std::set<std::string> names;
    for (const auto& r : j) names.insert(r.at("kind").get<std::string>());
    CHECK(names.count("thm2") == 1);
    CHECK(names.count("cor5") == 1);

    write_file(d / "bad.json",
               R"({"s_problems": 25, "s_algos": 5, "t_problems": 100, "t_algos": 5})");
    const std::string cmd = bin() + " bounds --config " + (d / "bad.json") + " --out " +
                            d.p.string() + " >/dev/null 2>" + (d / "err.txt");
    const int rc = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(rc) == 1);
    const std::string err = read_file(d / "err.txt");
    CHECK(err.find("partition ratio eta") != std::string::npos);
}

TEST_CASE("bad invocations exit nonzero", "[cli]") {
    TempDir d;
    CHECK(run("frobnicate") == 1);
    CHECK(run("gen") == 1);  // --config is required
    asel::io::write_file(d / "garbage.json", "not json");
    CHECK(run("gen --config " + (d / "garbage.json")) == 1);
    CHECK(run("--help") == 0);
}

TEST_CASE("experiment writes resumable results and plot renders them", "[cli]") {
    TempDir d;
    using asel::io::read_file;
    using asel::io::write_file;

    write_file(d / "exp.json",
               R"({"scenario": "problem_scale", "sweep": [16, 24], "n_seeds": 1,
                   "n_problems": 16, "n_algos": 3, "l_max": 16, "max_depth": 4,
                   "n_runs": 2, "base_population": 6, "base_iterations": 5,
                   "epochs": 2, "chi2_mc_n": 100, "seed": 3})");
    REQUIRE(run("experiment --config " + (d / "exp.json") + " --out " + d.p.string()) == 0);
    const std::string results = read_file(d / "results.csv");
    CHECK(std::count(results.begin(), results.end(), '\n') == 1 + 2 * 4);

    // second run resumes: every row is already present, file content unchanged
    REQUIRE(run("experiment --config " + (d / "exp.json") + " --out " + d.p.string()) == 0);
    CHECK(read_file(d / "results.csv") == results);

    REQUIRE(run("plot --out " + d.p.string()) == 0);
    const std::string svg = read_file(d / "problem_scale.svg");
    CHECK(svg.rfind("<svg", 0) == 0);
}
