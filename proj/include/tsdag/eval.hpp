#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsdag/citest.hpp"
#include "tsdag/local_learner.hpp"
#include "tsdag/simgen.hpp"

namespace tsdag {

/// Precision and recall for one edge set. Either may be absent: precision when nothing
/// was identified, recall when the truth has no such edges. Means skip absent values.
struct SetScore {
    std::optional<double> precision;
    std::optional<double> recall;
    int precision_runs = 0;
    int recall_runs = 0;
};

struct PrReport {
    SetScore pa;
    SetScore ch;
    SetScore pc;
    int replications = 1;
};

/// Pa and Ch are scored over directed edges at the target; undirected edges only count toward PC.
PrReport precision_recall(const LocalStructure& learned, const DynamicSem& truth, NodeId target);
PrReport precision_recall(const NodeSet& learned_pa, const NodeSet& learned_ch, const NodeSet& learned_pc,
                          const NodeSet& true_pa, const NodeSet& true_ch);
/// Arithmetic mean over replications, skipping absent values.
PrReport aggregate(std::span<const PrReport> runs);

enum class Method { tspcd, pcd };
std::string method_name(Method m);
Method parse_method(const std::string& s);

struct Table3Preset {
    std::string name;
    int n = 500;
    int m = 1;
    CoeffRange range;
};
const std::vector<Table3Preset>& table3_presets();
/// Throws ArgumentError for an unknown name.
const Table3Preset& table3_preset(const std::string& name);

struct Table3Options {
    int reps = 100;
    std::uint64_t seed = 1;
    int depth = 1;
    double alpha = 0.01;
    std::optional<int> max_sepset_size = 3;
    /// d-separation in the simulated truth replaces the Gaussian test.
    bool oracle = false;
    int jobs = 1;
    int target_var = 19;

    void validate() const;
};

struct Table3Cell {
    std::string preset;
    Method method = Method::tspcd;
    bool rescale = true;
    PrReport report;
};

/// Every (method, statistic) pair requested, sharing simulated data across cells.
std::vector<Table3Cell> run_table3_grid(const Table3Preset& preset, std::span<const Method> methods,
                                        const std::vector<bool>& rescale, const Table3Options& opts);
PrReport run_table3(const Table3Preset& preset, Method method, bool rescale, const Table3Options& opts);

enum class NullKind { iid, h0prime, h0dprime };
std::string null_name(NullKind k);
NullKind parse_null(const std::string& s);

struct CalibrationOptions {
    int reps = 1000;
    std::uint64_t seed = 1;
    int n = 500;
    int m = 1;
    CoeffRange range = CoeffRange::strong();
    double alpha = 0.01;
    std::optional<int> bandwidth;
    double lambda_floor = 0.1;
    bool prewhiten = true;
    int jobs = 1;

    void validate() const;
};

struct CalibrationVariant {
    std::vector<double> sorted_stats;
    std::vector<double> theoretical;
    double rejection_rate = 0.0;
    double ks_distance = 0.0;
};

struct CalibrationReport {
    std::string null_name;
    CiHypothesis hypothesis;
    int sample_size = 0;
    double alpha = 0.01;
    CalibrationVariant unrescaled;
    CalibrationVariant rescaled;
    double mean_lambda = 1.0;
};

struct CalibrationSetup {
    DynamicSem skeleton;
    CiHypothesis hypothesis;
};
/// iid: two unlinked variables, q = 0. h0prime / h0dprime: dynamic ALARM hypotheses.
CalibrationSetup calibration_setup(NullKind k);

/// Throws ArgumentError when the hypothesis is not d-separated in the truth.
CalibrationReport run_calibration(const CalibrationSetup& setup, const std::string& name, const CalibrationOptions& opts);
CalibrationReport run_calibration(NullKind k, const CalibrationOptions& opts);

/// sup |F_n - F| against chi-square(1) for a sorted sample.
double ks_distance_chi2_1(std::span<const double> sorted);
CalibrationVariant calibration_variant(std::vector<double> stats, double alpha);

void write_table3_csv(std::ostream& out, std::span<const Table3Cell> cells);
nlohmann::json table3_to_json(std::span<const Table3Cell> cells);
nlohmann::json pr_report_to_json(const PrReport& r);
void write_qq_csv(std::ostream& out, const CalibrationVariant& v);
void write_calibration_csv(std::ostream& out, std::span<const CalibrationReport> reports);
nlohmann::json calibration_to_json(const CalibrationReport& r);

}  // namespace tsdag
