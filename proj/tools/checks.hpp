#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsdag/graph.hpp"
#include "tsdag/local_learner.hpp"
#include "tsdag/ts_data.hpp"

// Structural checks shared by the acceptance runner and the unit tests.
namespace tsdag::checks {

struct OracleTargetCheck {
    bool pc_exact = false;
    bool lagged_parents = false;
    /// Every directed edge of the learned graph is directed the same way in the reference.
    bool orientations_sound = false;
    std::string detail;

    bool ok() const { return pc_exact && lagged_parents && orientations_sound; }
};

/// `reference` is the time-ordered CPDAG of `window`.
OracleTargetCheck check_oracle_target(const Dag& window, const Pdag& reference, const LocalStructure& ls);

struct DepthCheck {
    /// Learned adjacencies equal the true ones for every node closer than ls.depth.
    bool skeleton_exact = false;
    /// No learned edge is absent from the truth.
    bool no_false_edges = false;
    /// Every directed edge is directed the same way in the reference CPDAG.
    bool orientations_sound = false;
    /// Every collider learned from a recorded separator is a v-structure of the truth.
    bool no_false_v_structures = false;
    std::string detail;

    bool ok() const { return skeleton_exact && no_false_edges && orientations_sound && no_false_v_structures; }
};

/// Current-time nodes at shortest current-time distance below ls.depth from the target.
NodeSet nodes_within_depth(const Dag& window, const TimeLayout& layout, NodeId target, int depth);

DepthCheck check_within_depth(const Dag& window, const Pdag& reference, const LocalStructure& ls);

/// Every labelled DAG on n nodes (n <= 6).
std::vector<Dag> all_dags(int n);

/// Every PDAG on n nodes whose directed part is acyclic (n <= 4).
std::vector<Pdag> all_pdags(int n);

/// Edge-wise vote over the consistent extensions of g: DAGs with g's skeleton that keep
/// its directed edges and have exactly its unshielded colliders. An edge stays directed
/// only if every extension agrees. Empty when g has no consistent extension.
std::optional<Pdag> extension_vote(const Pdag& g);

/// Counts PDAGs on n nodes with a consistent extension and those where the Meek closure
/// differs from extension_vote.
struct MeekSweep {
    int checked = 0;
    int mismatches = 0;
};
MeekSweep meek_vote_sweep(int n);

/// Largest change in G^2 (relative), p-value, lambda and |partial correlation| when each
/// variable is rescaled by a random nonzero factor and shifted, over random data sets.
double affine_invariance_drift(std::uint64_t seed, int trials);

/// Random replicate shapes; returns how many piled row counts differ from
/// sum over kept replicates of (n_j - q), with N = sum n_j - q m when none is dropped.
int piling_count_failures(std::uint64_t seed, int trials);

/// Largest gap between partial_correlation and the residual-regression formula on
/// random SPD covariance matrices.
double partial_corr_oracle_gap(std::uint64_t seed, int trials);

struct Ar1Moments {
    double coefficient = 0.0;
    double mean_variance = 0.0;
    double expected = 0.0;
    double standard_error = 0.0;

    bool within(double sigmas) const { return std::abs(mean_variance - expected) <= sigmas * standard_error; }
};
/// Simulates X_t = b X_{t-1} + e_t with unit noise and averages per-replicate variances.
Ar1Moments ar1_moments(double b, int reps, int n, std::uint64_t seed);

/// Names of a 58-gene panel used for the T-cell-shaped smoke data; includes JUND, JUNB and FYB.
std::vector<std::string> tcell_gene_names();

/// Synthetic expression data with 44 replicates of 10 time points over the 58 genes,
/// drawn from a sparse stationary dynamic SEM.
TimeSeriesDataset tcell_like_dataset(std::uint64_t seed);

}  // namespace tsdag::checks
