#include "tsdag/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsdag/alarm.hpp"
#include "tsdag/ci_tester.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/eval.hpp"
#include "tsdag/graph_io.hpp"
#include "tsdag/local_learner.hpp"
#include "tsdag/simgen.hpp"
#include "tsdag/ts_data.hpp"

namespace tsdag {

namespace {

using nlohmann::json;

struct SeedOpt {
    std::optional<std::uint64_t> flag;

    // --seed, then TSDAG_SEED, then 1.
    std::uint64_t resolve() const {
        if (flag) return *flag;
        if (const char* env = std::getenv("TSDAG_SEED")) {
            try {
                std::size_t used = 0;
                const std::string s(env);
                const unsigned long long v = std::stoull(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            } catch (const std::exception&) {
                throw ArgumentError(std::string("TSDAG_SEED is not an unsigned integer: ") + env);
            }
        }
        return 1;
    }
};

CoeffRange parse_range(const std::string& s) {
    if (s == "weak") return CoeffRange::weak();
    if (s == "strong") return CoeffRange::strong();
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ArgumentError("range must be weak, strong or LO:HI");
    CoeffRange r;
    try {
        r.lo = std::stod(s.substr(0, colon));
        r.hi = std::stod(s.substr(colon + 1));
    } catch (const std::exception&) {
        throw ArgumentError("range must be weak, strong or LO:HI");
    }
    r.validate();
    return r;
}

json range_json(const CoeffRange& r) { return {{"lo", r.lo}, {"hi", r.hi}}; }

json run_record(const std::string& command, json config) {
    return {{"tool", "tsdag"}, {"version", tool_version}, {"command", command}, {"config", std::move(config)}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ArgumentError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw ArgumentError("failed writing '" + path + "'");
}

json opt_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::string hypothesis_label(const CiHypothesis& h, const TimeLayout& lay, const std::vector<std::string>& vars) {
    std::string s = node_label(h.a, lay, vars) + " _||_ " + node_label(h.b, lay, vars) + " | {";
    for (std::size_t i = 0; i < h.s.size(); ++i) s += (i ? ", " : "") + node_label(h.s[i], lay, vars);
    return s + "}";
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string preset;
    std::string graph;
    std::optional<int> m;
    std::optional<int> n;
    std::string range;
    int burn_in = 200;
    SeedOpt seed;
    std::string out;
    std::string truth;
    std::string format;
    bool random_self_lag_signs = false;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    DynamicSem skeleton;
    SimConfig cfg;
    if (!a.preset.empty()) {
        const Table3Preset& p = table3_preset(a.preset);
        skeleton = extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
        cfg.range = p.range;
        cfg.m = p.m;
        cfg.lengths = {p.n};
    } else {
        if (std::filesystem::exists(a.graph) && std::filesystem::file_size(a.graph) == 0)
            throw ArgumentError("graph file '" + a.graph + "' is empty");
        skeleton = sem_from_graph_file(read_graph_file(a.graph));
    }
    if (a.m) cfg.m = *a.m;
    if (a.n) cfg.lengths = {*a.n};
    if (!a.range.empty()) cfg.range = parse_range(a.range);
    cfg.burn_in = a.burn_in;
    cfg.seed = a.seed.resolve();
    cfg.positive_self_lags = !a.random_self_lag_signs;
    cfg.validate();

    const DataFormat fmt = a.format.empty() ? format_for(a.out) : (a.format == "json" ? DataFormat::json : DataFormat::csv);
    const Simulation sim = simulate(skeleton, cfg);
    save_dataset(sim.data, a.out, fmt);

    const std::string truth_path = a.truth.empty() ? a.out + ".truth.json" : a.truth;
    json config{{"preset", a.preset.empty() ? json(nullptr) : json(a.preset)},
                {"graph", a.graph.empty() ? json(nullptr) : json(a.graph)},
                {"m", cfg.m},
                {"n", cfg.lengths},
                {"range", range_json(cfg.range)},
                {"burn_in", cfg.burn_in},
                {"seed", cfg.seed},
                {"positive_self_lags", cfg.positive_self_lags},
                {"out", a.out},
                {"format", fmt == DataFormat::json ? "json" : "csv"}};
    json truth = run_record("simulate", std::move(config));
    truth["sem"] = sem_to_json(sim.sem);
    const Dag window = sim.sem.window_dag();
    Pdag directed(window.node_count());
    for (const auto& [from, to] : window.edges()) directed.add_directed(from, to);
    truth["graph"] = to_json(pdag_to_graph_file(directed, sim.sem.layout(), sim.data.variables));
    write_text(truth_path, truth.dump(2) + "\n");
    out << "wrote " << sim.data.m() << " replicate(s) x " << sim.data.p() << " variables to " << a.out
        << "; truth in " << truth_path << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- learn

struct LearnArgs {
    std::string data;
    std::string target;
    int lag = 1;
    int depth = 1;
    double alpha = 0.01;
    bool no_rescale = false;
    bool ignore_time_order = false;
    int max_sepset = 3;
    bool unbounded = false;
    std::optional<int> bandwidth;
    bool no_prewhiten = false;
    std::string on_singular = "fail";
    std::string out;
};

int cmd_learn(const LearnArgs& a, std::ostream& out, std::ostream& err) {
    const TimeSeriesDataset ds = load_dataset(a.data);
    const int var = ds.variable_index(a.target);
    if (var < 0) throw ArgumentError("unknown target variable '" + a.target + "'");
    if (a.lag < 0) throw ArgumentError("lag must be non-negative");

    std::vector<std::string> warnings;
    auto pm = std::make_shared<const PiledMatrix>(pile(ds, a.lag, &warnings));
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    const TimeLayout lay = pm->layout();
    for (Eigen::Index c = 0; c < pm->data.cols(); ++c) {
        const auto col = pm->data.col(c);
        if ((col.array() == col(0)).all())
            throw DegenerateError("column " + node_label(static_cast<NodeId>(c), lay, ds.variables) +
                                  " has zero variance in the piled data");
    }

    CiTestConfig cc;
    cc.alpha = a.alpha;
    cc.rescale = !a.no_rescale;
    cc.bandwidth = a.bandwidth;
    cc.prewhiten = !a.no_prewhiten;
    cc.validate();
    auto engine = std::make_shared<GaussianCiEngine>(pm, true, a.bandwidth, cc.prewhiten);
    GaussianCiTester tester(engine, cc);

    LearnConfig lc;
    lc.depth = a.depth;
    lc.ignore_time_order = a.ignore_time_order;
    lc.mmpc.max_sepset_size = a.unbounded ? std::nullopt : std::optional<int>(a.max_sepset);
    lc.validate();

    const LocalStructure ls = learn_local(tester, lay, lay.node(var, 0), lc);
    if (!ls.failed_tests.empty()) {
        const std::string first = hypothesis_label(ls.failed_tests.front(), lay, ds.variables);
        if (a.on_singular == "fail")
            throw SingularityError("singular statistic for " + first + " (" +
                                   std::to_string(ls.failed_tests.size()) + " failed test(s))");
        err << "warning: " << ls.failed_tests.size() << " singular test(s) treated as dependent, first: " << first
            << "\n";
    }

    json result = local_structure_to_json(ls, ds.variables);
    result["run"] = run_record("learn", {{"data", a.data},
                                         {"target", a.target},
                                         {"lag", a.lag},
                                         {"depth", a.depth},
                                         {"alpha", cc.alpha},
                                         {"rescale", cc.rescale},
                                         {"bandwidth", engine->bandwidth()},
                                         {"prewhiten", cc.prewhiten},
                                         {"lambda_floor", cc.lambda_floor},
                                         {"ignore_time_order", lc.ignore_time_order},
                                         {"max_sepset_size", opt_int(lc.mmpc.max_sepset_size)},
                                         {"on_singular", a.on_singular},
                                         {"piled_rows", pm->rows()}});
    const std::string text = result.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_text(a.out, text);
        auto labels = [&](const NodeSet& s) {
            std::string r;
            for (NodeId n : s) r += (r.empty() ? "" : " ") + node_label(n, lay, ds.variables);
            return r.empty() ? std::string("-") : r;
        };
        out << "target " << a.target << ": parents " << labels(ls.parents()) << "; children "
            << labels(ls.children()) << "; undirected " << labels(ls.undirected_neighbors()) << "\n";
    }
    return exit_ok;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::string preset = "all";
    std::string method = "both";
    std::string statistic = "both";
    int reps = 100;
    SeedOpt seed;
    int jobs = 1;
    int depth = 1;
    double alpha = 0.01;
    int max_sepset = 3;
    bool unbounded = false;
    bool oracle = false;
    std::string out;
    std::string json_out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    Table3Options o;
    o.reps = a.reps;
    o.seed = a.seed.resolve();
    o.jobs = a.jobs;
    o.depth = a.depth;
    o.alpha = a.alpha;
    o.max_sepset_size = a.unbounded ? std::nullopt : std::optional<int>(a.max_sepset);
    o.oracle = a.oracle;
    o.validate();

    std::vector<Method> methods;
    if (a.method == "both") methods = {Method::tspcd, Method::pcd};
    else methods = {parse_method(a.method)};
    std::vector<bool> stats;
    if (a.oracle || a.statistic == "rescaled") stats = {true};
    else if (a.statistic == "unrescaled") stats = {false};
    else if (a.statistic == "both") stats = {true, false};
    else throw ArgumentError("statistic must be rescaled, unrescaled or both");

    std::vector<const Table3Preset*> presets;
    if (a.preset == "all")
        for (const auto& p : table3_presets()) presets.push_back(&p);
    else
        presets.push_back(&table3_preset(a.preset));

    std::vector<Table3Cell> cells;
    for (const Table3Preset* p : presets) {
        auto c = run_table3_grid(*p, methods, stats, o);
        cells.insert(cells.end(), c.begin(), c.end());
    }
    std::ostringstream csv;
    write_table3_csv(csv, cells);
    if (a.out.empty()) out << csv.str();
    else write_text(a.out, csv.str());
    if (!a.json_out.empty()) {
        json j = table3_to_json(cells);
        j["run"] = run_record("eval", {{"preset", a.preset},
                                       {"method", a.method},
                                       {"statistic", a.statistic},
                                       {"reps", o.reps},
                                       {"seed", o.seed},
                                       {"depth", o.depth},
                                       {"alpha", o.alpha},
                                       {"max_sepset_size", opt_int(o.max_sepset_size)},
                                       {"oracle", o.oracle},
                                       {"target", alarm_graph().variables.at(o.target_var)}});
        write_text(a.json_out, j.dump(2) + "\n");
    }
    return exit_ok;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
    std::string null;
    int reps = 1000;
    SeedOpt seed;
    int n = 500;
    int m = 1;
    std::string range = "strong";
    double alpha = 0.01;
    std::optional<int> bandwidth;
    bool no_prewhiten = false;
    int jobs = 1;
    std::string qq;
    std::string qq_unrescaled;
    std::string out;
    std::string json_out;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& out) {
    CalibrationOptions o;
    o.reps = a.reps;
    o.seed = a.seed.resolve();
    o.n = a.n;
    o.m = a.m;
    o.range = parse_range(a.range);
    o.alpha = a.alpha;
    o.bandwidth = a.bandwidth;
    o.prewhiten = !a.no_prewhiten;
    o.jobs = a.jobs;
    o.validate();
    const NullKind k = parse_null(a.null);
    const CalibrationReport rep = run_calibration(k, o);

    std::ostringstream qq;
    write_qq_csv(qq, rep.rescaled);
    if (a.qq.empty()) out << qq.str();
    else write_text(a.qq, qq.str());
    if (!a.qq_unrescaled.empty()) {
        std::ostringstream raw;
        write_qq_csv(raw, rep.unrescaled);
        write_text(a.qq_unrescaled, raw.str());
    }
    if (!a.out.empty()) {
        std::ostringstream csv;
        const CalibrationReport reps[] = {rep};
        write_calibration_csv(csv, reps);
        write_text(a.out, csv.str());
    }
    if (!a.json_out.empty()) {
        json j = calibration_to_json(rep);
        j["run"] = run_record("calibrate", {{"null", a.null},
                                            {"reps", o.reps},
                                            {"seed", o.seed},
                                            {"n", o.n},
                                            {"m", o.m},
                                            {"range", range_json(o.range)},
                                            {"alpha", o.alpha},
                                            {"bandwidth", opt_int(o.bandwidth)},
                                            {"prewhiten", o.prewhiten}});
        write_text(a.json_out, j.dump(2) + "\n");
    }
    return exit_ok;
}

void add_seed(CLI::App* app, SeedOpt& s) {
    app->add_option("--seed", s.flag, "Master seed (default: TSDAG_SEED, then 1)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Local DAG learning from replicated multivariate time series", "tsdag"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Simulate a dataset from a dynamic linear-Gaussian SEM");
    auto* preset_opt = sim->add_option("--preset", sa.preset, "Benchmark preset name");
    auto* graph_opt = sim->add_option("--graph", sa.graph, "Graph file (JSON); q = 0 graphs get self-lags");
    preset_opt->excludes(graph_opt);
    sim->add_option("--m", sa.m, "Number of replicates");
    sim->add_option("--n", sa.n, "Length of each replicate");
    sim->add_option("--range", sa.range, "Coefficient magnitudes: weak, strong or LO:HI");
    sim->add_option("--burn-in", sa.burn_in, "Discarded warm-up steps");
    add_seed(sim, sa.seed);
    sim->add_option("--out", sa.out, "Dataset output path (.csv or .json)")->required();
    sim->add_option("--truth", sa.truth, "Truth sidecar path (default <out>.truth.json)");
    sim->add_option("--format", sa.format, "csv or json (default from extension)")
        ->check(CLI::IsMember({"csv", "json"}));
    sim->add_flag("--random-self-lag-signs", sa.random_self_lag_signs, "Give self-lag coefficients random signs");

    LearnArgs la;
    auto* learn = app.add_subcommand("learn", "Learn the local structure around a target");
    learn->add_option("--data", la.data, "Dataset (.csv or .json)")->required();
    learn->add_option("--target", la.target, "Target variable name")->required();
    learn->add_option("--lag", la.lag, "Lag order q");
    learn->add_option("--depth", la.depth, "Depth d");
    learn->add_option("--alpha", la.alpha, "Significance level");
    learn->add_flag("--no-rescale", la.no_rescale, "Use the unrescaled statistic");
    learn->add_flag("--ignore-time-order", la.ignore_time_order, "PCD-PCD baseline without time order");
    auto* ms = learn->add_option("--max-sepset", la.max_sepset, "Largest conditioning set");
    learn->add_flag("--unbounded-sepset", la.unbounded, "No cap on conditioning sets")->excludes(ms);
    learn->add_option("--bandwidth", la.bandwidth, "Bartlett truncation lag (default automatic)");
    learn->add_flag("--no-prewhiten", la.no_prewhiten, "Plain Bartlett long-run variance");
    learn->add_option("--on-singular", la.on_singular, "fail (exit 3) or warn")
        ->check(CLI::IsMember({"fail", "warn"}));
    learn->add_option("--out", la.out, "Output JSON (default stdout)");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Precision/recall benchmark around ALARM node VENTLUNG");
    ev->add_option("--preset", ea.preset, "Preset name or all");
    ev->add_option("--method", ea.method, "tspcd, pcd or both");
    ev->add_option("--statistic", ea.statistic, "rescaled, unrescaled or both");
    ev->add_option("--reps", ea.reps, "Replications per cell");
    add_seed(ev, ea.seed);
    ev->add_option("--jobs", ea.jobs, "Worker threads");
    ev->add_option("--depth", ea.depth, "Depth d");
    ev->add_option("--alpha", ea.alpha, "Significance level");
    auto* ems = ev->add_option("--max-sepset", ea.max_sepset, "Largest conditioning set");
    ev->add_flag("--unbounded-sepset", ea.unbounded, "No cap on conditioning sets")->excludes(ems);
    ev->add_flag("--oracle", ea.oracle, "Use d-separation in the simulated truth");
    ev->add_option("--out", ea.out, "CSV output (default stdout)");
    ev->add_option("--json", ea.json_out, "JSON report with run record");

    CalibrateArgs ca;
    auto* cal = app.add_subcommand("calibrate", "Null calibration of the CLRT statistic");
    cal->add_option("--null", ca.null, "iid, h0prime or h0dprime")->required();
    cal->add_option("--reps", ca.reps, "Simulations");
    add_seed(cal, ca.seed);
    cal->add_option("--n", ca.n, "Series length");
    cal->add_option("--m", ca.m, "Replicates per simulation");
    cal->add_option("--range", ca.range, "Coefficient magnitudes: weak, strong or LO:HI");
    cal->add_option("--alpha", ca.alpha, "Level for the rejection rate");
    cal->add_option("--bandwidth", ca.bandwidth, "Bartlett truncation lag (default automatic)");
    cal->add_flag("--no-prewhiten", ca.no_prewhiten, "Plain Bartlett long-run variance");
    cal->add_option("--jobs", ca.jobs, "Worker threads");
    cal->add_option("--qq", ca.qq, "Q-Q CSV of the rescaled statistic (default stdout)");
    cal->add_option("--qq-unrescaled", ca.qq_unrescaled, "Q-Q CSV of the unrescaled statistic");
    cal->add_option("--out", ca.out, "Summary CSV");
    cal->add_option("--json", ca.json_out, "JSON report with run record");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
        if (sim->parsed()) {
            if (sa.preset.empty() && sa.graph.empty()) throw ArgumentError("simulate needs --preset or --graph");
            return cmd_simulate(sa, out);
        }
        if (learn->parsed()) return cmd_learn(la, out, err);
        if (ev->parsed()) return cmd_eval(ea, out);
        if (cal->parsed()) return cmd_calibrate(ca, out);
        return exit_usage;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << "\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return exit_numerical;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    }
}

}  // namespace tsdag
