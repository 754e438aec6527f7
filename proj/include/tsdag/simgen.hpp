#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tsdag/graph.hpp"
#include "tsdag/graph_io.hpp"
#include "tsdag/ts_data.hpp"

namespace tsdag {

struct WithinEdge {
    int from = 0;
    int to = 0;
    double coef = 0.0;
};

/// Edge from variable `from_var` at t-lag to `to_var` at t.
struct LagEdge {
    int from_var = 0;
    int lag = 1;
    int to_var = 0;
    double coef = 0.0;
};

/// Recursive linear-Gaussian structural equation model on a dynamic DAG:
/// X_t = B0 X_t + sum_l B_l X_{t-l} + eps, eps ~ N(0, diag(noise_sd^2)).
struct DynamicSem {
    std::vector<std::string> variables;
    int q = 1;
    Dag base;
    std::vector<WithinEdge> within;
    std::vector<LagEdge> lags;
    std::vector<double> noise_sd;

    int p() const { return base.node_count(); }
    TimeLayout layout() const { return {p(), q}; }
    /// Throws ArgumentError on inconsistent sizes, lags outside 1..q, duplicates,
    /// within edges missing from `base` or non-positive noise.
    void validate() const;
    /// Unrolled truth on the p(q+1) window nodes; every edge is repeated in each
    /// block where both endpoints fit.
    Dag window_dag() const;
    Eigen::MatrixXd within_matrix() const;
    Eigen::MatrixXd lag_matrix(int lag) const;
};

/// Coefficient magnitudes are uniform on [lo, hi] with an independent random sign.
struct CoeffRange {
    double lo = 0.2;
    double hi = 0.6;

    static CoeffRange weak() { return {0.2, 0.6}; }
    static CoeffRange strong() { return {0.4, 0.6}; }
    void validate() const;
};

struct SimConfig {
    CoeffRange range;
    int m = 1;
    /// One length for every replicate, or exactly m lengths.
    std::vector<int> lengths{500};
    int burn_in = 200;
    std::uint64_t seed = 0;
    /// Self-lag coefficients drawn with a positive sign only.
    bool positive_self_lags = true;

    int length(int replicate) const;
    void validate() const;
};

/// Within-time edges of `dag` plus a self-lag edge for every variable. Only q = 1.
DynamicSem extend_to_dynamic(const Dag& dag, int q = 1, std::vector<std::string> variables = {});
/// Graph file with q = 0 is extended with self-lags; otherwise edges are taken as given.
DynamicSem sem_from_graph_file(const GraphFile& g);

DynamicSem sample_coefficients(DynamicSem sem, const CoeffRange& range, std::uint64_t seed,
                               bool positive_self_lags = true);

/// Companion matrix of the implied VAR(q) transition.
Eigen::MatrixXd transition_matrix(const DynamicSem& sem);
double spectral_radius(const DynamicSem& sem);

/// Samples cfg.m replicates; throws ArgumentError when the system is not stationary.
TimeSeriesDataset generate_dataset(const DynamicSem& sem, const SimConfig& cfg);

struct Simulation {
    DynamicSem sem;
    TimeSeriesDataset data;
};

/// Coefficients and data both derived from cfg.seed.
Simulation simulate(const DynamicSem& skeleton, const SimConfig& cfg);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of stream `index` under `master`, independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

nlohmann::json sem_to_json(const DynamicSem& sem);
DynamicSem sem_from_json(const nlohmann::json& j);

}  // namespace tsdag
