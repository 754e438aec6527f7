#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tsdag/citest.hpp"
#include "tsdag/graph.hpp"
#include "tsdag/ts_data.hpp"

namespace tsdag {

/// Outcome of one conditional-independence query as seen by the search routines.
struct CiDecision {
    bool independent = true;
    double p_value = 1.0;
};

/// Source of conditional-independence decisions over nodes 0..node_count-1.
/// Implementations memoise, so instances are not safe to share between threads.
class CiTester {
public:
    virtual ~CiTester() = default;
    virtual int node_count() const = 0;
    /// Throws NumericalError when the statistic cannot be computed.
    virtual CiDecision test(NodeId a, NodeId b, std::span<const NodeId> s) = 0;
    /// Distinct queries evaluated (cache misses).
    virtual std::size_t evaluations() const = 0;
};

/// Key for memoising a query: (min(a,b), max(a,b), sorted s).
struct CiKey {
    std::vector<NodeId> nodes;
    bool operator==(const CiKey&) const = default;
};
struct CiKeyHash {
    std::size_t operator()(const CiKey& k) const noexcept;
};
CiKey make_ci_key(NodeId a, NodeId b, std::span<const NodeId> s);

inline constexpr int kOracleBitNodes = 256;
using OracleBits = std::array<std::uint64_t, kOracleBitNodes / 64>;
inline constexpr double kOracleDistanceScale = 1e-6;

/// Answers queries by d-separation in a known DAG. Dependent answers carry a p-value
/// below kOracleDistanceScale that increases with the shortest active path length.
class OracleCiTester final : public CiTester {
public:
    explicit OracleCiTester(Dag dag);

    int node_count() const override { return dag_.node_count(); }
    CiDecision test(NodeId a, NodeId b, std::span<const NodeId> s) override;
    std::size_t evaluations() const override { return evaluations_; }
    const Dag& dag() const { return dag_; }

private:
    int connection_length(NodeId a, NodeId b, const OracleBits& zmask) const;

    Dag dag_;
    std::vector<OracleBits> parent_mask_;
    std::vector<OracleBits> child_mask_;
    std::unordered_map<CiKey, int, CiKeyHash> cache_;
    std::size_t evaluations_ = 0;
};

/// Raw Gaussian statistics for one hypothesis, before any decision rule.
struct RawCiStatistic {
    double partial_corr = 0.0;
    double g2 = 0.0;
    double lambda_hat = 1.0;  // unclipped
    std::string error;        // non-empty when the statistic could not be computed
};

/// Shared per-dataset state: centred piled data, covariance and a memo of raw
/// statistics. Several testers with different decision rules can share one engine.
class GaussianCiEngine {
public:
    GaussianCiEngine(std::shared_ptr<const PiledMatrix> pm, bool center = true, std::optional<int> bandwidth = {},
                     bool prewhiten = true);

    const PiledMatrix& piled() const { return *pm_; }
    const SufficientStats& stats() const { return stats_; }
    int bandwidth() const { return bandwidth_; }
    bool prewhiten() const { return prewhiten_; }
    const RawCiStatistic& raw(NodeId a, NodeId b, std::span<const NodeId> s);
    std::size_t evaluations() const { return evaluations_; }

private:
    RawCiStatistic compute(const CiKey& key) const;

    std::shared_ptr<const PiledMatrix> pm_;
    SufficientStats stats_;
    Eigen::MatrixXd centered_;
    Eigen::MatrixXd centred_cov_;
    int bandwidth_;
    bool prewhiten_;
    std::unordered_map<CiKey, RawCiStatistic, CiKeyHash> cache_;
    std::size_t evaluations_ = 0;
};

/// Composite likelihood ratio test on piled data, optionally rescaled by lambda.
class GaussianCiTester final : public CiTester {
public:
    GaussianCiTester(std::shared_ptr<GaussianCiEngine> engine, CiTestConfig cfg);

    int node_count() const override { return static_cast<int>(engine_->stats().covariance.rows()); }
    CiDecision test(NodeId a, NodeId b, std::span<const NodeId> s) override;
    std::size_t evaluations() const override { return engine_->evaluations(); }

    /// Full result record for one hypothesis under this tester's configuration.
    CiTestResult result(const CiHypothesis& h);
    const CiTestConfig& config() const { return cfg_; }

private:
    std::shared_ptr<GaussianCiEngine> engine_;
    CiTestConfig cfg_;
};

}  // namespace tsdag
