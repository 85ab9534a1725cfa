#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "asel/bounds.hpp"
#include "asel/distshift.hpp"
#include "asel/experiments.hpp"
#include "asel/expr.hpp"
#include "asel/labeling.hpp"
#include "asel/net.hpp"
#include "asel/portfolio.hpp"
#include "asel/selectors.hpp"

// Persistence: JSON for configs/models, JSONL for problems, CSV for
// matrices/results, SVG for plots. All writers format doubles with
// shortest-round-trip notation, so write -> read -> write is byte-identical.

namespace asel::io {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
}

// ---- tokens / problems (JSONL) ----

inline json token_to_json(const Token& t) {
    json j;
    switch (t.kind) {
        case NodeKind::Operator: j["k"] = "op"; j["op"] = t.op; j["a"] = t.arity; break;
        case NodeKind::Variable: j["k"] = "var"; j["i"] = t.var_index; break;
        case NodeKind::Constant: j["k"] = "const"; j["v"] = t.value; break;
    }
    return j;
}

inline Token token_from_json(const json& j) {
    Token t;
    const std::string k = j.at("k");
    if (k == "op") {
        t.kind = NodeKind::Operator;
        t.op = j.at("op");
        t.arity = j.at("a");
    } else if (k == "var") {
        t.kind = NodeKind::Variable;
        t.var_index = j.at("i");
    } else if (k == "const") {
        t.kind = NodeKind::Constant;
        t.value = j.at("v");
    } else {
        throw std::runtime_error("bad token kind: " + k);
    }
    return t;
}

inline std::string problems_to_jsonl(const std::vector<ProblemInstance>& ps) {
    std::ostringstream out;
    for (const auto& p : ps) {
        json j;
        j["id"] = p.id;
        j["dim"] = p.dim;
        j["lo"] = p.lo;
        j["hi"] = p.hi;
        j["max_depth"] = p.max_depth;
        j["gen_logprob"] = p.gen_logprob;
        json rpn = json::array();
        for (const auto& t : p.rpn) rpn.push_back(token_to_json(t));
        j["rpn"] = std::move(rpn);
        out << j.dump() << '\n';
    }
    return out.str();
}

inline std::vector<ProblemInstance> problems_from_jsonl(const std::string& text) {
    std::vector<ProblemInstance> ps;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        ProblemInstance p;
        p.id = j.at("id");
        p.dim = j.at("dim");
        p.lo = j.at("lo").get<std::vector<double>>();
        p.hi = j.at("hi").get<std::vector<double>>();
        p.max_depth = j.at("max_depth");
        p.gen_logprob = j.at("gen_logprob");
        for (const auto& tj : j.at("rpn")) p.rpn.push_back(token_from_json(tj));
        p.tree = tree_from_rpn(p.rpn);
        ps.push_back(std::move(p));
    }
    return ps;
}

// ---- portfolio.json ----

inline json algo_to_json(const AlgorithmSpec& a) {
    json j;
    j["id"] = a.id;
    j["family"] = family_name(a.family);
    j["population_size"] = a.population_size;
    j["iterations"] = a.iterations;
    j["mutation_rate"] = a.mutation_rate;
    j["crossover_rate"] = a.crossover_rate;
    j["inertia_or_cooling"] = a.inertia_or_cooling;
    j["selection_pressure"] = a.selection_pressure;
    j["elitism"] = a.elitism;
    return j;
}

inline AlgorithmSpec algo_from_json(const json& j) {
    AlgorithmSpec a;
    a.id = j.at("id");
    a.family = family_from_name(j.at("family"));
    a.population_size = j.at("population_size");
    a.iterations = j.at("iterations");
    a.mutation_rate = j.at("mutation_rate");
    a.crossover_rate = j.at("crossover_rate");
    a.inertia_or_cooling = j.at("inertia_or_cooling");
    a.selection_pressure = j.at("selection_pressure");
    a.elitism = j.at("elitism");
    return a;
}

inline std::string portfolio_to_json(const std::vector<AlgorithmSpec>& port) {
    json j = json::array();
    for (const auto& a : port) j.push_back(algo_to_json(a));
    return j.dump(2) + "\n";
}

inline std::vector<AlgorithmSpec> portfolio_from_json(const std::string& text) {
    std::vector<AlgorithmSpec> port;
    for (const auto& aj : json::parse(text)) port.push_back(algo_from_json(aj));
    return port;
}

// ---- perf.csv / labels.csv ----

inline std::string perf_to_csv(const PerformanceMatrix& m) {
    std::ostringstream out;
    out << "problem_id,algo_id,mean_best,n_runs\n";
    for (std::size_t i = 0; i < m.problem_count(); ++i)
        for (std::size_t j = 0; j < m.algo_count(); ++j)
            out << m.problem_ids[i] << ',' << m.algo_ids[j] << ',' << fmt(m.mean_best[i][j])
                << ',' << m.n_runs << '\n';
    return out.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') { out.push_back(cur); cur.clear(); }
        else cur += c;
    }
    out.push_back(cur);
    return out;
}

inline PerformanceMatrix perf_from_csv(const std::string& text) {
    PerformanceMatrix m;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);  // header
    std::map<int, std::map<int, double>> cells;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw std::runtime_error("bad perf.csv row: " + line);
        cells[std::stoi(f[0])][std::stoi(f[1])] = parse_double(f[2]);
        m.n_runs = std::stoi(f[3]);
    }
    if (cells.empty()) throw std::runtime_error("perf.csv has no rows");
    for (const auto& [aid, _] : cells.begin()->second) m.algo_ids.push_back(aid);
    for (const auto& [pid, row] : cells) {
        m.problem_ids.push_back(pid);
        std::vector<double> r;
        for (int aid : m.algo_ids) r.push_back(row.at(aid));
        m.mean_best.push_back(std::move(r));
    }
    recompute_best(m);
    return m;
}

inline std::string labels_to_csv(const PerformanceMatrix& m) {
    std::ostringstream out;
    out << "problem_id,best_algo\n";
    for (std::size_t i = 0; i < m.problem_count(); ++i)
        out << m.problem_ids[i] << ',' << m.best_algo[i] << '\n';
    return out.str();
}

// ---- model.json ----

inline json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) w.push_back(m(r, c));
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    j["weights"] = std::move(w);
    return j;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = j.at("rows"), cols = j.at("cols");
    const auto w = j.at("weights").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(w.size()) != rows * cols)
        throw std::runtime_error("matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = w[k++];
    return m;
}

inline json network_to_json(const Network& net) {
    json layers = json::array();
    for (const auto& l : net.layers) {
        json lj = matrix_to_json(l.W);
        lj["bias"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
        lj["activation"] = activation_name(l.act);
        layers.push_back(std::move(lj));
    }
    json j;
    j["layers"] = std::move(layers);
    return j;
}

inline Network network_from_json(const json& j) {
    Network net;
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.W = matrix_from_json(lj);
        const auto b = lj.at("bias").get<std::vector<double>>();
        l.b = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        l.act = activation_from_name(lj.at("activation"));
        net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
}

inline std::string selector_to_json(const SelectorModel& m) {
    json j = network_to_json(m.net);
    json meta;
    meta["kind"] = selector_kind_name(m.kind);
    meta["feature_len"] = m.bind.feature_len;
    meta["algo_count"] = m.bind.algo_count;
    meta["predefined_len"] = m.bind.predefined_len;
    meta["embedding_dim"] = m.bind.embedding_dim;
    meta["gamma_margin"] = m.bind.gamma_margin;
    meta["algo_ids"] = m.algo_ids;
    if (m.kind == SelectorKind::ModelA) {
        meta["pf"] = matrix_to_json(m.pf);
        meta["af"] = matrix_to_json(m.af);
    }
    if (m.kind == SelectorKind::ModelReg) {
        meta["reg_mean"] = std::vector<double>(m.reg_mean.data(), m.reg_mean.data() + m.reg_mean.size());
        meta["reg_std"] = std::vector<double>(m.reg_std.data(), m.reg_std.data() + m.reg_std.size());
    }
    j["meta"] = std::move(meta);
    return j.dump(2) + "\n";
}

inline SelectorModel selector_from_json(const std::string& text) {
    const json j = json::parse(text);
    const json& meta = j.at("meta");
    SelectorModel m;
    m.kind = selector_kind_from_name(meta.at("kind"));
    m.bind.feature_len = meta.at("feature_len");
    m.bind.algo_count = meta.at("algo_count");
    m.bind.predefined_len = meta.at("predefined_len");
    m.bind.embedding_dim = meta.at("embedding_dim");
    m.bind.gamma_margin = meta.at("gamma_margin");
    m.algo_ids = meta.at("algo_ids").get<std::vector<int>>();
    m.net = network_from_json(j);
    if (m.kind == SelectorKind::ModelA) {
        m.pf = matrix_from_json(meta.at("pf"));
        m.af = matrix_from_json(meta.at("af"));
    }
    if (m.kind == SelectorKind::ModelReg) {
        const auto mu = meta.at("reg_mean").get<std::vector<double>>();
        const auto sd = meta.at("reg_std").get<std::vector<double>>();
        m.reg_mean = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        m.reg_std = Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
    }
    return m;
}

// ---- bounds.json / shift.json ----

inline json bound_report_to_json(const BoundReport& r) {
    json j;
    j["kind"] = bound_kind_name(r.kind);
    j["value"] = r.value;
    j["applicable"] = r.applicable;
    if (!r.reason.empty()) j["reason"] = r.reason;
    json terms, consts;
    for (const auto& [k, v] : r.terms) terms[k] = v;
    for (const auto& [k, v] : r.constants) consts[k] = v;
    j["terms"] = std::move(terms);
    j["constants"] = std::move(consts);
    return j;
}

inline std::string bounds_to_json(const std::vector<BoundReport>& reports) {
    json j = json::array();
    for (const auto& r : reports) j.push_back(bound_report_to_json(r));
    return j.dump(2) + "\n";
}

inline json operator_table_to_json(const OperatorTable& t) {
    json ops = json::array();
    for (const auto& e : t.entries)
        ops.push_back({{"name", e.name}, {"arity", e.arity}, {"weight", e.weight}});
    json j;
    j["operators"] = std::move(ops);
    j["leaf_var_weight"] = t.leaf_var_weight;
    j["leaf_const_weight"] = t.leaf_const_weight;
    return j;
}

inline OperatorTable operator_table_from_json(const json& j) {
    OperatorTable t;
    for (const auto& oj : j.at("operators"))
        t.entries.push_back({oj.at("name"), oj.at("arity"), oj.at("weight")});
    t.leaf_var_weight = j.at("leaf_var_weight");
    t.leaf_const_weight = j.at("leaf_const_weight");
    t.validate();
    return t;
}

inline json generative_config_to_json(const GenerativeConfig& g) {
    json j;
    j["operator_table"] = operator_table_to_json(g.operator_table);
    j["algo_weights"] = g.algo_weights;
    j["dim"] = g.dim;
    j["max_depth"] = g.max_depth;
    return j;
}

inline GenerativeConfig generative_config_from_json(const json& j) {
    GenerativeConfig g;
    g.operator_table = operator_table_from_json(j.at("operator_table"));
    g.algo_weights = j.at("algo_weights").get<std::vector<double>>();
    g.dim = j.at("dim");
    g.max_depth = j.at("max_depth");
    g.validate();
    return g;
}

inline std::string shift_to_json(const GenerativeConfig& train, const GenerativeConfig& test,
                                 const DivergenceReport& rep) {
    json j;
    j["train"] = generative_config_to_json(train);
    j["test"] = generative_config_to_json(test);
    j["divergence"] = {{"chi2_algo", rep.chi2_algo},
                       {"chi2_problem_mc", rep.chi2_problem_mc},
                       {"chi2_problem_stderr", rep.chi2_problem_stderr},
                       {"n_mc", rep.n_mc},
                       {"smoothing_eps", rep.smoothing_eps}};
    return j.dump(2) + "\n";
}

// ---- results.csv ----

inline constexpr const char* kResultsHeader =
    "scenario,sweep_value,model,seed,error_S,error_T,gap,bound,chi2,fallback,wall_time_s";

inline std::string result_row_to_csv(const ResultRow& r) {
    std::ostringstream out;
    out << r.scenario << ',' << fmt(r.sweep_value) << ',' << r.model << ',' << r.seed << ','
        << fmt(r.error_s) << ',' << fmt(r.error_t) << ',' << fmt(r.gap) << ','
        << (std::isnan(r.bound) ? "" : fmt(r.bound)) << ','
        << (std::isnan(r.chi2) ? "" : fmt(r.chi2)) << ',' << (r.fallback ? 1 : 0) << ','
        << fmt(r.wall_time_s);
    return out.str();
}

inline std::string results_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << kResultsHeader << '\n';
    for (const auto& r : rows) out << result_row_to_csv(r) << '\n';
    return out.str();
}

inline std::vector<ResultRow> results_from_csv(const std::string& text) {
    std::vector<ResultRow> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (line != kResultsHeader) throw std::runtime_error("results.csv: unexpected header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw std::runtime_error("bad results.csv row: " + line);
        ResultRow r;
        r.scenario = f[0];
        r.sweep_value = parse_double(f[1]);
        r.model = f[2];
        r.seed = std::stoull(f[3]);
        r.error_s = parse_double(f[4]);
        r.error_t = parse_double(f[5]);
        r.gap = parse_double(f[6]);
        r.bound = parse_double(f[7]);
        r.chi2 = parse_double(f[8]);
        r.fallback = f[9] == "1";
        r.wall_time_s = parse_double(f[10]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---- run manifests ----

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string digest_hex(const std::string& content) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    return buf;
}

// one JSON line appended next to the artifact; append-only by contract
inline void append_manifest(const std::filesystem::path& artifact, const std::string& config_text,
                            std::uint64_t master_seed,
                            const std::vector<std::string>& inputs) {
    json j;
    j["tool_version"] = kToolVersion;
    j["master_seed"] = master_seed;
    j["config_digest"] = digest_hex(config_text);
    j["digest"] = digest_hex(read_file(artifact));
    j["inputs"] = inputs;
    j["output"] = artifact.string();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    std::filesystem::path mp = artifact;
    mp += ".manifest.jsonl";
    std::ofstream f(mp, std::ios::binary | std::ios::app);
    if (!f) throw std::runtime_error("cannot write " + mp.string());
    f << j.dump() << '\n';
}

// ---- SVG plots ----

namespace detail {
inline std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}
}  // namespace detail

// line chart: x = sweep value, y = mean accuracy, error bars = stddev,
// one series per model kind; byte-deterministic for fixed input.
inline std::string render_plot(const std::vector<SummaryRow>& summary,
                               const std::string& scenario) {
    std::map<std::string, std::vector<const SummaryRow*>> series;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    for (const auto& s : summary) {
        if (s.scenario != scenario) continue;
        series[s.model].push_back(&s);
        xmin = std::min(xmin, s.sweep_value);
        xmax = std::max(xmax, s.sweep_value);
    }
    if (series.empty()) throw std::runtime_error("no rows for scenario " + scenario);
    if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
    const double W = 640, H = 420, ml = 60, mr = 20, mt = 30, mb = 45;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - y * (H - mt - mb); };  // accuracy in [0,1]
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\">\n"
        << "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n"
        << "<text x=\"320\" y=\"20\" text-anchor=\"middle\" font-family=\"monospace\" "
           "font-size=\"14\">" << scenario << "</text>\n"
        << "<line x1=\"" << detail::coord(ml) << "\" y1=\"" << detail::coord(H - mb)
        << "\" x2=\"" << detail::coord(W - mr) << "\" y2=\"" << detail::coord(H - mb)
        << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << detail::coord(ml) << "\" y1=\"" << detail::coord(mt) << "\" x2=\""
        << detail::coord(ml) << "\" y2=\"" << detail::coord(H - mb) << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double y = i / 5.0;
        out << "<text x=\"" << detail::coord(ml - 8) << "\" y=\"" << detail::coord(py(y) + 4)
            << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\">"
            << detail::coord(y) << "</text>\n";
    }
    out << "<text x=\"320\" y=\"" << detail::coord(H - 10)
        << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">sweep "
           "value</text>\n";
    int ci = 0;
    for (auto& [model, pts] : series) {
        std::sort(pts.begin(), pts.end(), [](const SummaryRow* a, const SummaryRow* b) {
            return a->sweep_value < b->sweep_value;
        });
        const char* color = kColors[ci % 6];
        if (pts.size() > 1) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t k = 0; k < pts.size(); ++k) {
                if (k) out << ' ';
                out << detail::coord(px(pts[k]->sweep_value)) << ','
                    << detail::coord(py(pts[k]->mean_accuracy));
            }
            out << "\"/>\n";
        }
        for (const auto* p : pts) {
            const double x = px(p->sweep_value);
            const double y0 = py(std::max(0.0, p->mean_accuracy - p->stddev_accuracy));
            const double y1 = py(std::min(1.0, p->mean_accuracy + p->stddev_accuracy));
            out << "<line x1=\"" << detail::coord(x) << "\" y1=\"" << detail::coord(y0)
                << "\" x2=\"" << detail::coord(x) << "\" y2=\"" << detail::coord(y1)
                << "\" stroke=\"" << color << "\"/>\n"
                << "<circle cx=\"" << detail::coord(x) << "\" cy=\""
                << detail::coord(py(p->mean_accuracy)) << "\" r=\"3\" fill=\"" << color
                << "\"/>\n";
        }
        out << "<text x=\"" << detail::coord(W - mr - 120) << "\" y=\""
            << detail::coord(mt + 15 + 15 * ci) << "\" font-family=\"monospace\" "
           "font-size=\"11\" fill=\"" << color << "\">" << model << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace asel::io
