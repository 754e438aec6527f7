#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tsdag/graph.hpp"
#include "tsdag/ts_data.hpp"

namespace tsdag {

/// H0: column a independent of column b given the columns in s.
struct CiHypothesis {
    NodeId a = 0;
    NodeId b = 0;
    std::vector<NodeId> s;

    /// Throws ArgumentError on a == b, a or b inside s, duplicates or out-of-range indices.
    void validate(int node_count) const;
    /// a < b and s sorted; tests are computed on this form so they are symmetric in (a, b).
    CiHypothesis normalized() const;
};

struct CiTestConfig {
    double alpha = 0.01;
    bool rescale = true;
    /// Bartlett truncation lag; automatic when empty (see default_bandwidth).
    std::optional<int> bandwidth;
    double lambda_floor = 0.1;
    /// AR(1) prewhitening of the score products before the Bartlett sum.
    bool prewhiten = true;

    void validate() const;
};

struct CiTestResult {
    double g2 = 0.0;
    double lambda_hat = 1.0;
    double p_value = 1.0;
    bool independent = true;
    double partial_corr = 0.0;
    int n_effective = 0;
};

/// Sample partial correlation of a and b given s, from the inverse of the covariance
/// submatrix on {a, b} u s. Throws SingularityError if that submatrix is singular or
/// has condition number above 1e12.
double partial_correlation(const SufficientStats& stats, const CiHypothesis& h);

/// G^2 = -N log(1 - r^2): the Gaussian likelihood ratio statistic of the piled rows.
double clrt_statistic(double partial_corr, int n);
double clrt_statistic(const SufficientStats& stats, const CiHypothesis& h);

/// max(q, floor(4 (N / 100)^(2/9))).
int default_bandwidth(int n, int q);

/// Serial-dependence rescale factor: long-run variance over variance of the score
/// products u_t = e_a e_b / (s_a s_b), where e are residuals of a and b regressed on s.
/// Lag products never cross a segment boundary. Clipped below at cfg.lambda_floor.
double estimate_lambda(const PiledMatrix& pm, const CiHypothesis& h, const CiTestConfig& cfg);

CiTestResult ci_test(const PiledMatrix& pm, const SufficientStats& stats, const CiHypothesis& h,
                     const CiTestConfig& cfg);

/// Upper tail, CDF and quantile of the chi-square distribution with one degree of freedom.
double chi2_1_sf(double x);
double chi2_1_cdf(double x);
double chi2_1_quantile(double prob);

namespace detail {

/// Regression coefficients of column `target` on `regressors` from a covariance matrix,
/// and the residual variance. Uses a rank-revealing factorisation of the regressor block.
struct Regression {
    Eigen::VectorXd coef;
    double residual_variance = 0.0;
};
Regression regress(const Eigen::MatrixXd& cov, int target, const std::vector<int>& regressors);

/// Lambda from already-centred residual vectors (one entry per piled row). With
/// `prewhiten` the score products are AR(1)-whitened within segments before the
/// Bartlett sum and the result is recoloured.
double lambda_from_residuals(const PiledMatrix& pm, const Eigen::VectorXd& ea, const Eigen::VectorXd& eb,
                             int bandwidth, bool prewhiten = true);

}  // namespace detail

}  // namespace tsdag
