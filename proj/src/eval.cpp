#include "tsdag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "tsdag/alarm.hpp"
#include "tsdag/ci_tester.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/parallel.hpp"

namespace tsdag {

namespace {

SetScore score_set(const NodeSet& learned, const NodeSet& truth) {
    std::size_t hits = 0;
    for (NodeId n : learned) hits += truth.contains(n);
    SetScore s;
    if (!learned.empty()) {
        s.precision = static_cast<double>(hits) / static_cast<double>(learned.size());
        s.precision_runs = 1;
    }
    if (!truth.empty()) {
        s.recall = static_cast<double>(hits) / static_cast<double>(truth.size());
        s.recall_runs = 1;
    }
    return s;
}

SetScore mean_set(std::span<const PrReport> runs, SetScore PrReport::*field) {
    double ps = 0, rs = 0;
    SetScore out;
    for (const auto& r : runs) {
        const SetScore& s = r.*field;
        if (s.precision) {
            ps += *s.precision * s.precision_runs;
            out.precision_runs += s.precision_runs;
        }
        if (s.recall) {
            rs += *s.recall * s.recall_runs;
            out.recall_runs += s.recall_runs;
        }
    }
    if (out.precision_runs > 0) out.precision = ps / out.precision_runs;
    if (out.recall_runs > 0) out.recall = rs / out.recall_runs;
    return out;
}

std::string fmt(std::optional<double> v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

nlohmann::json opt_json(std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

constexpr const char* kConvention =
    "precision absent (NA) when no edge was identified and excluded from the mean; "
    "Pa/Ch scored over directed edges only, undirected edges count toward PC";

}  // namespace

PrReport precision_recall(const NodeSet& learned_pa, const NodeSet& learned_ch, const NodeSet& learned_pc,
                          const NodeSet& true_pa, const NodeSet& true_ch) {
    NodeSet true_pc = true_pa;
    true_pc.insert(true_ch.begin(), true_ch.end());
    PrReport r;
    r.pa = score_set(learned_pa, true_pa);
    r.ch = score_set(learned_ch, true_ch);
    r.pc = score_set(learned_pc, true_pc);
    return r;
}

PrReport precision_recall(const LocalStructure& learned, const DynamicSem& truth, NodeId target) {
    if (learned.target != target) throw ArgumentError("learned structure belongs to a different target");
    if (!(learned.layout == truth.layout())) throw ArgumentError("learned structure and truth use different windows");
    const Dag window = truth.window_dag();
    return precision_recall(learned.parents(), learned.children(), learned.pc(), window.parents(target),
                            window.children(target));
}

PrReport aggregate(std::span<const PrReport> runs) {
    PrReport out;
    out.pa = mean_set(runs, &PrReport::pa);
    out.ch = mean_set(runs, &PrReport::ch);
    out.pc = mean_set(runs, &PrReport::pc);
    out.replications = 0;
    for (const auto& r : runs) out.replications += r.replications;
    return out;
}

std::string method_name(Method m) { return m == Method::tspcd ? "tsPCD-PCD" : "PCD-PCD"; }

Method parse_method(const std::string& s) {
    if (s == "tspcd" || s == "tsPCD-PCD") return Method::tspcd;
    if (s == "pcd" || s == "PCD-PCD") return Method::pcd;
    throw ArgumentError("unknown method '" + s + "' (expected tspcd or pcd)");
}

const std::vector<Table3Preset>& table3_presets() {
    static const std::vector<Table3Preset> presets{
        {"alarm-n500-weak", 500, 1, CoeffRange::weak()},
        {"alarm-n10m50-weak", 10, 50, CoeffRange::weak()},
        {"alarm-n500-strong", 500, 1, CoeffRange::strong()},
        {"alarm-n1000-weak", 1000, 1, CoeffRange::weak()},
    };
    return presets;
}

const Table3Preset& table3_preset(const std::string& name) {
    for (const auto& p : table3_presets())
        if (p.name == name) return p;
    throw ArgumentError("unknown preset '" + name + "'");
}

void Table3Options::validate() const {
    if (reps < 1) throw ArgumentError("reps must be at least 1");
    if (depth < 1) throw ArgumentError("depth must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    if (max_sepset_size && *max_sepset_size < 0) throw ArgumentError("max sepset size must be non-negative");
    if (jobs < 1) throw ArgumentError("jobs must be at least 1");
}

std::vector<Table3Cell> run_table3_grid(const Table3Preset& preset, std::span<const Method> methods,
                                        const std::vector<bool>& rescale, const Table3Options& opts) {
    opts.validate();
    if (methods.empty() || rescale.empty()) throw ArgumentError("no evaluation cell requested");
    const DynamicSem skeleton = extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
    if (opts.target_var < 0 || opts.target_var >= skeleton.p()) throw ArgumentError("target variable out of range");
    const TimeLayout layout = skeleton.layout();
    const NodeId target = layout.node(opts.target_var, 0);

    // Oracle answers do not depend on the statistic, so only one rescale entry is run.
    const std::vector<bool>& stats = rescale;
    const std::size_t ncell = methods.size() * stats.size();
    std::vector<std::vector<PrReport>> runs(ncell, std::vector<PrReport>(opts.reps));

    parallel_for(static_cast<std::size_t>(opts.reps), opts.jobs, [&](std::size_t r) {
        SimConfig sc;
        sc.range = preset.range;
        sc.m = preset.m;
        sc.lengths = {preset.n};
        sc.seed = derive_seed(opts.seed, r);
        const Simulation sim = simulate(skeleton, sc);

        std::shared_ptr<GaussianCiEngine> engine;
        std::unique_ptr<OracleCiTester> oracle;
        if (opts.oracle)
            oracle = std::make_unique<OracleCiTester>(sim.sem.window_dag());
        else
            engine = std::make_shared<GaussianCiEngine>(std::make_shared<const PiledMatrix>(pile(sim.data, 1)));

        for (std::size_t mi = 0; mi < methods.size(); ++mi)
            for (std::size_t si = 0; si < stats.size(); ++si) {
                LearnConfig lc;
                lc.depth = opts.depth;
                lc.mmpc.max_sepset_size = opts.max_sepset_size;
                lc.ignore_time_order = methods[mi] == Method::pcd;
                LocalStructure ls;
                if (oracle) {
                    ls = learn_local(*oracle, layout, target, lc);
                } else {
                    CiTestConfig cc;
                    cc.alpha = opts.alpha;
                    cc.rescale = stats[si];
                    GaussianCiTester tester(engine, cc);
                    ls = learn_local(tester, layout, target, lc);
                }
                runs[mi * stats.size() + si][r] = precision_recall(ls, sim.sem, target);
            }
    });

    std::vector<Table3Cell> cells;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (std::size_t si = 0; si < stats.size(); ++si)
            cells.push_back({preset.name, methods[mi], stats[si], aggregate(runs[mi * stats.size() + si])});
    return cells;
}

PrReport run_table3(const Table3Preset& preset, Method method, bool rescale, const Table3Options& opts) {
    const Method ms[] = {method};
    return run_table3_grid(preset, ms, std::vector<bool>{rescale}, opts).front().report;
}

std::string null_name(NullKind k) {
    switch (k) {
        case NullKind::iid: return "iid";
        case NullKind::h0prime: return "h0prime";
        case NullKind::h0dprime: return "h0dprime";
    }
    return "";
}

NullKind parse_null(const std::string& s) {
    if (s == "iid") return NullKind::iid;
    if (s == "h0prime") return NullKind::h0prime;
    if (s == "h0dprime") return NullKind::h0dprime;
    throw ArgumentError("unknown null hypothesis '" + s + "' (expected iid, h0prime or h0dprime)");
}

void CalibrationOptions::validate() const {
    if (reps < 1) throw ArgumentError("reps must be at least 1");
    if (n < 1 || m < 1) throw ArgumentError("n and m must be positive");
    range.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    if (bandwidth && *bandwidth < 0) throw ArgumentError("bandwidth must be non-negative");
    if (jobs < 1) throw ArgumentError("jobs must be at least 1");
}

CalibrationSetup calibration_setup(NullKind k) {
    CalibrationSetup s;
    if (k == NullKind::iid) {
        s.skeleton.q = 0;
        s.skeleton.base = Dag(2);
        s.skeleton.variables = {"X1", "X2"};
        s.skeleton.noise_sd = {1.0, 1.0};
        s.hypothesis = {0, 1, {}};
        return s;
    }
    s.skeleton = extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
    const TimeLayout lay = s.skeleton.layout();
    if (k == NullKind::h0prime)
        s.hypothesis = {lay.node(23, 0), lay.node(1, 0), {}};
    else
        s.hypothesis = {lay.node(3, 0), lay.node(0, 0), {lay.node(1, 1), lay.node(1, 0)}};
    return s;
}

double ks_distance_chi2_1(std::span<const double> sorted) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = chi2_1_cdf(sorted[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

CalibrationVariant calibration_variant(std::vector<double> stats, double alpha) {
    CalibrationVariant v;
    std::sort(stats.begin(), stats.end());
    const double n = static_cast<double>(stats.size());
    const double crit = chi2_1_quantile(1.0 - alpha);
    std::size_t rejected = 0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        v.theoretical.push_back(chi2_1_quantile((static_cast<double>(i) + 0.5) / n));
        rejected += stats[i] > crit;
    }
    v.rejection_rate = static_cast<double>(rejected) / n;
    v.ks_distance = ks_distance_chi2_1(stats);
    v.sorted_stats = std::move(stats);
    return v;
}

CalibrationReport run_calibration(const CalibrationSetup& setup, const std::string& name, const CalibrationOptions& opts) {
    opts.validate();
    const DynamicSem& skel = setup.skeleton;
    skel.validate();
    const CiHypothesis& h = setup.hypothesis;
    const TimeLayout lay = skel.layout();
    h.validate(lay.node_count());
    if (!d_separated(skel.window_dag(), h.a, h.b, h.s))
        throw ArgumentError("calibration hypothesis is not a conditional independence of the truth");

    std::vector<double> raw(opts.reps), scaled(opts.reps), lambdas(opts.reps);
    parallel_for(static_cast<std::size_t>(opts.reps), opts.jobs, [&](std::size_t r) {
        SimConfig sc;
        sc.range = opts.range;
        sc.m = opts.m;
        sc.lengths = {opts.n};
        sc.seed = derive_seed(opts.seed, r);
        const Simulation sim = simulate(skel, sc);
        GaussianCiEngine engine(std::make_shared<const PiledMatrix>(pile(sim.data, skel.q)), true, opts.bandwidth,
                                opts.prewhiten);
        const RawCiStatistic& st = engine.raw(h.a, h.b, h.s);
        if (!st.error.empty()) throw SingularityError(st.error);
        raw[r] = st.g2;
        lambdas[r] = st.lambda_hat;
        scaled[r] = st.g2 / std::max(opts.lambda_floor, st.lambda_hat);
    });

    CalibrationReport rep;
    rep.null_name = name;
    rep.hypothesis = h;
    rep.sample_size = opts.reps;
    rep.alpha = opts.alpha;
    double sum = 0.0;
    for (double l : lambdas) sum += l;
    rep.mean_lambda = sum / opts.reps;
    rep.unrescaled = calibration_variant(std::move(raw), opts.alpha);
    rep.rescaled = calibration_variant(std::move(scaled), opts.alpha);
    return rep;
}

CalibrationReport run_calibration(NullKind k, const CalibrationOptions& opts) {
    return run_calibration(calibration_setup(k), null_name(k), opts);
}

void write_table3_csv(std::ostream& out, std::span<const Table3Cell> cells) {
    out << "# " << kConvention << "\n";
    out << "preset,statistic,method,reps,pa_precision,pa_recall,ch_precision,ch_recall,pc_precision,pc_recall\n";
    for (const auto& c : cells) {
        const PrReport& r = c.report;
        out << c.preset << ',' << (c.rescale ? "G2/lambda" : "G2") << ',' << method_name(c.method) << ','
            << r.replications << ',' << fmt(r.pa.precision) << ',' << fmt(r.pa.recall) << ','
            << fmt(r.ch.precision) << ',' << fmt(r.ch.recall) << ',' << fmt(r.pc.precision) << ','
            << fmt(r.pc.recall) << '\n';
    }
}

nlohmann::json pr_report_to_json(const PrReport& r) {
    auto set = [](const SetScore& s) {
        return nlohmann::json{{"precision", opt_json(s.precision)},
                              {"recall", opt_json(s.recall)},
                              {"precision_runs", s.precision_runs},
                              {"recall_runs", s.recall_runs}};
    };
    return {{"replications", r.replications}, {"pa", set(r.pa)}, {"ch", set(r.ch)}, {"pc", set(r.pc)}};
}

nlohmann::json table3_to_json(std::span<const Table3Cell> cells) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : cells)
        rows.push_back({{"preset", c.preset},
                        {"statistic", c.rescale ? "G2/lambda" : "G2"},
                        {"method", method_name(c.method)},
                        {"scores", pr_report_to_json(c.report)}});
    return {{"convention", kConvention}, {"cells", std::move(rows)}};
}

void write_qq_csv(std::ostream& out, const CalibrationVariant& v) {
    out << "theoretical,empirical\n";
    for (std::size_t i = 0; i < v.sorted_stats.size(); ++i)
        out << fmt17(v.theoretical[i]) << ',' << fmt17(v.sorted_stats[i]) << '\n';
}

void write_calibration_csv(std::ostream& out, std::span<const CalibrationReport> reports) {
    out << "null,statistic,sample_size,alpha,rejection_rate,ks_distance,mean_lambda\n";
    for (const auto& r : reports)
        for (int k = 0; k < 2; ++k) {
            const CalibrationVariant& v = k == 0 ? r.unrescaled : r.rescaled;
            out << r.null_name << ',' << (k == 0 ? "G2" : "G2/lambda") << ',' << r.sample_size << ','
                << fmt17(r.alpha) << ',' << fmt17(v.rejection_rate) << ',' << fmt17(v.ks_distance) << ','
                << fmt17(r.mean_lambda) << '\n';
        }
}

nlohmann::json calibration_to_json(const CalibrationReport& r) {
    auto variant = [](const CalibrationVariant& v) {
        return nlohmann::json{{"rejection_rate", v.rejection_rate}, {"ks_distance", v.ks_distance}};
    };
    return {{"null", r.null_name},
            {"hypothesis", {{"a", r.hypothesis.a}, {"b", r.hypothesis.b}, {"s", r.hypothesis.s}}},
            {"sample_size", r.sample_size},
            {"alpha", r.alpha},
            {"mean_lambda", r.mean_lambda},
            {"unrescaled", variant(r.unrescaled)},
            {"rescaled", variant(r.rescaled)}};
}

}  // namespace tsdag
