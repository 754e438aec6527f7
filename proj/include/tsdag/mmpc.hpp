#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdag/ci_tester.hpp"
#include "tsdag/citest.hpp"
#include "tsdag/graph.hpp"

namespace tsdag {

struct MmpcConfig {
    /// Largest conditioning set tried; std::nullopt searches every subset.
    std::optional<int> max_sepset_size = 3;
    /// Nodes eligible for PCD[u]; empty means every node of the tester.
    std::vector<NodeId> candidate_scope;

    void validate() const;
};

/// Minimum association of u and v over conditioning sets drawn from CPCD.
/// value is 0 exactly when some tested set made u and v independent.
struct Association {
    double value = 0.0;
    NodeSet witness;
};

struct PcdResult {
    NodeId node = 0;
    /// In order of entry into the candidate set.
    std::vector<NodeId> pcd;
    /// Separator for every candidate that was rejected, keyed by (node, candidate).
    SepsetRegistry sepsets;
    std::size_t test_count = 0;
    std::vector<std::string> diagnostics;
    /// Queries whose statistic could not be computed (treated as dependent).
    std::vector<CiHypothesis> failed_tests;

    bool contains(NodeId v) const;
};

/// Bookkeeping shared by the MMPC phases: test counting and error handling. A test
/// that fails numerically counts as a dependence and leaves a diagnostic.
class MmpcContext {
public:
    MmpcContext(CiTester& tester, const MmpcConfig& cfg);

    CiDecision test(NodeId u, NodeId v, std::span<const NodeId> s);
    /// 0 on independence, 1 - p otherwise.
    double association(NodeId u, NodeId v, std::span<const NodeId> s);

    CiTester& tester() { return tester_; }
    const MmpcConfig& config() const { return cfg_; }
    std::size_t test_count() const { return test_count_; }
    std::vector<std::string>& diagnostics() { return diagnostics_; }
    std::vector<CiHypothesis>& failed_tests() { return failed_; }
    int max_size(std::size_t available) const;

private:
    CiTester& tester_;
    const MmpcConfig& cfg_;
    std::size_t test_count_ = 0;
    std::vector<std::string> diagnostics_;
    std::vector<CiHypothesis> failed_;
};

/// Enumerates subsets of `pool` of size 0..max_size, smallest first and in
/// lexicographic order of positions within each size. The callback returns true to stop.
template <typename F>
bool for_each_subset(std::span<const NodeId> pool, int max_size, F&& f);

Association min_assoc(MmpcContext& ctx, NodeId u, NodeId v, std::span<const NodeId> cpcd);

/// Forward (max-min) phase. Rejected candidates get their witness recorded in `sepsets`.
std::vector<NodeId> mmpc_forward(MmpcContext& ctx, NodeId u, SepsetRegistry* sepsets = nullptr);

/// Backward phase: drops candidates made independent of u by a subset of the rest.
PcdResult mmpc_backward(MmpcContext& ctx, NodeId u, std::vector<NodeId> cpcd);

PcdResult find_pcd(CiTester& tester, NodeId u, const MmpcConfig& cfg);

// ---------------------------------------------------------------- implementation

namespace detail {
template <typename F>
bool subsets_of_size(std::span<const NodeId> pool, int size, std::vector<NodeId>& current, std::size_t start, F& f) {
    if (static_cast<int>(current.size()) == size) return f(std::span<const NodeId>(current));
    const std::size_t need = static_cast<std::size_t>(size) - current.size();
    for (std::size_t i = start; i + need <= pool.size(); ++i) {
        current.push_back(pool[i]);
        const bool stop = subsets_of_size(pool, size, current, i + 1, f);
        current.pop_back();
        if (stop) return true;
    }
    return false;
}
}  // namespace detail

template <typename F>
bool for_each_subset(std::span<const NodeId> pool, int max_size, F&& f) {
    std::vector<NodeId> current;
    const int top = std::min<int>(max_size, static_cast<int>(pool.size()));
    for (int size = 0; size <= top; ++size) {
        current.clear();
        if (detail::subsets_of_size(pool, size, current, 0, f)) return true;
    }
    return false;
}

}  // namespace tsdag
