#include "tsdag/citest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "tsdag/errors.hpp"

namespace tsdag {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMaxWhitening = 0.97;

std::string describe(const CiHypothesis& h) {
    std::ostringstream os;
    os << h.a << " _||_ " << h.b << " | {";
    for (std::size_t i = 0; i < h.s.size(); ++i) os << (i ? "," : "") << h.s[i];
    os << "}";
    return os.str();
}

std::vector<int> columns_of(const CiHypothesis& h) {
    std::vector<int> cols{h.a, h.b};
    cols.insert(cols.end(), h.s.begin(), h.s.end());
    return cols;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd out(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) out(i, j) = m(idx[i], idx[j]);
    return out;
}

void check_conditioning(const Eigen::MatrixXd& sub, const CiHypothesis& h) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(lo > 0.0) || hi / lo > kMaxCondition)
        throw SingularityError("singular covariance submatrix for " + describe(h) + " (columns {a, b} u S)");
}

}  // namespace

void CiHypothesis::validate(int node_count) const {
    auto ok = [node_count](NodeId n) { return n >= 0 && n < node_count; };
    if (!ok(a) || !ok(b)) throw ArgumentError("hypothesis node out of range: " + describe(*this));
    if (a == b) throw ArgumentError("hypothesis needs two distinct nodes: " + describe(*this));
    std::set<NodeId> seen;
    for (NodeId x : s) {
        if (!ok(x)) throw ArgumentError("separator node out of range: " + describe(*this));
        if (x == a || x == b) throw ArgumentError("tested node inside separator: " + describe(*this));
        if (!seen.insert(x).second) throw ArgumentError("duplicate separator node: " + describe(*this));
    }
}

CiHypothesis CiHypothesis::normalized() const {
    CiHypothesis h{std::min(a, b), std::max(a, b), s};
    std::sort(h.s.begin(), h.s.end());
    return h;
}

void CiTestConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in (0, 1)");
    if (bandwidth && *bandwidth < 0) throw ArgumentError("bandwidth must be non-negative");
    if (!(lambda_floor > 0.0)) throw ArgumentError("lambda floor must be positive");
}

double partial_correlation(const SufficientStats& stats, const CiHypothesis& raw) {
    raw.validate(static_cast<int>(stats.covariance.rows()));
    const CiHypothesis h = raw.normalized();
    const Eigen::MatrixXd sub = submatrix(stats.covariance, columns_of(h));
    check_conditioning(sub, h);
    const Eigen::MatrixXd prec = sub.ldlt().solve(Eigen::MatrixXd::Identity(sub.rows(), sub.cols()));
    const double r = -prec(0, 1) / std::sqrt(prec(0, 0) * prec(1, 1));
    return std::clamp(r, -1.0, 1.0);
}

double clrt_statistic(double r, int n) {
    if (n < 1) throw ArgumentError("statistic needs at least one row");
    if (!(std::abs(r) < 1.0)) throw NumericalError("partial correlation of magnitude 1: infinite statistic");
    const double g2 = -static_cast<double>(n) * std::log1p(-r * r);
    return std::max(g2, 0.0);
}

double clrt_statistic(const SufficientStats& stats, const CiHypothesis& h) {
    return clrt_statistic(partial_correlation(stats, h), stats.n);
}

int default_bandwidth(int n, int q) {
    const int automatic = static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 2.0 / 9.0)));
    return std::max(q, automatic);
}

namespace detail {

Regression regress(const Eigen::MatrixXd& cov, int target, const std::vector<int>& regressors) {
    Regression out;
    const auto k = static_cast<Eigen::Index>(regressors.size());
    if (k == 0) {
        out.residual_variance = cov(target, target);
        return out;
    }
    const Eigen::MatrixXd sss = submatrix(cov, regressors);
    Eigen::VectorXd sst(k);
    for (Eigen::Index i = 0; i < k; ++i) sst(i) = cov(regressors[i], target);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sss);
    qr.setThreshold(1.0 / kMaxCondition);
    if (qr.rank() < k) throw SingularityError("collinear conditioning set in residual regression");
    out.coef = qr.solve(sst);
    out.residual_variance = cov(target, target) - sst.dot(out.coef);
    return out;
}

double lambda_from_residuals(const PiledMatrix& pm, const Eigen::VectorXd& ea, const Eigen::VectorXd& eb,
                             int bandwidth, bool prewhiten) {
    const int n = pm.rows();
    const double va = ea.squaredNorm() / n;
    const double vb = eb.squaredNorm() / n;
    if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateError("zero residual variance in lambda estimate");
    const Eigen::VectorXd u = ea.cwiseProduct(eb) / std::sqrt(va * vb);

    double mean = 0.0;
    for (int s : pm.reduction_order) mean += u.segment(pm.segment_offsets[s], pm.segment_lengths[s]).sum();
    mean /= n;

    std::vector<Eigen::VectorXd> segs;
    double gamma0 = 0.0;
    for (int s : pm.reduction_order) {
        segs.push_back(u.segment(pm.segment_offsets[s], pm.segment_lengths[s]).array() - mean);
        gamma0 += segs.back().squaredNorm();
    }
    if (!(gamma0 > 0.0)) throw DegenerateError("score products have zero variance in lambda estimate");

    // AR(1) prewhitening; the Bartlett estimate of the whitened series is recoloured by 1/(1-phi)^2.
    double phi = 0.0;
    if (prewhiten) {
        double num = 0.0, den = 0.0;
        for (const auto& d : segs) {
            const auto len = d.size();
            if (len < 2) continue;
            num += d.head(len - 1).dot(d.tail(len - 1));
            den += d.head(len - 1).squaredNorm();
        }
        if (den > 0.0) phi = std::clamp(num / den, -kMaxWhitening, kMaxWhitening);
    }
    double v0 = 0.0;
    double cross = 0.0;
    std::size_t rows = 0;
    for (const auto& d : segs) {
        const Eigen::VectorXd v = phi == 0.0 ? d : Eigen::VectorXd(d.tail(d.size() - 1) - phi * d.head(d.size() - 1));
        const int len = static_cast<int>(v.size());
        rows += static_cast<std::size_t>(len);
        v0 += v.squaredNorm();
        for (int l = 1; l <= bandwidth && l < len; ++l) {
            const double w = 1.0 - static_cast<double>(l) / (bandwidth + 1);
            cross += w * v.head(len - l).dot(v.tail(len - l));
        }
    }
    if (rows == 0 || !(v0 > 0.0)) return 1.0;
    const double lrv = (v0 + 2.0 * cross) / static_cast<double>(rows) / ((1.0 - phi) * (1.0 - phi));
    return lrv / (gamma0 / n);
}

}  // namespace detail

double estimate_lambda(const PiledMatrix& pm, const CiHypothesis& raw, const CiTestConfig& cfg) {
    cfg.validate();
    raw.validate(static_cast<int>(pm.data.cols()));
    const CiHypothesis h = raw.normalized();
    const std::vector<int> cols = columns_of(h);
    const int n = pm.rows();
    const auto k = static_cast<Eigen::Index>(cols.size());

    Eigen::MatrixXd x(n, k);
    for (Eigen::Index c = 0; c < k; ++c) x.col(c) = pm.data.col(cols[c]);
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(k);
    for (int s : pm.reduction_order) mean += x.middleRows(pm.segment_offsets[s], pm.segment_lengths[s]).colwise().sum();
    mean /= n;
    x.rowwise() -= mean;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(k, k);
    for (int s : pm.reduction_order) {
        const auto blk = x.middleRows(pm.segment_offsets[s], pm.segment_lengths[s]);
        cov.noalias() += blk.transpose() * blk;
    }
    cov /= n;

    std::vector<int> sidx;
    for (Eigen::Index i = 2; i < k; ++i) sidx.push_back(static_cast<int>(i));
    const auto ra = detail::regress(cov, 0, sidx);
    const auto rb = detail::regress(cov, 1, sidx);
    Eigen::VectorXd ea = x.col(0);
    Eigen::VectorXd eb = x.col(1);
    for (std::size_t i = 0; i < sidx.size(); ++i) {
        ea.noalias() -= ra.coef(static_cast<Eigen::Index>(i)) * x.col(sidx[i]);
        eb.noalias() -= rb.coef(static_cast<Eigen::Index>(i)) * x.col(sidx[i]);
    }
    const int bw = cfg.bandwidth.value_or(default_bandwidth(n, pm.q));
    return std::max(cfg.lambda_floor, detail::lambda_from_residuals(pm, ea, eb, bw, cfg.prewhiten));
}

CiTestResult ci_test(const PiledMatrix& pm, const SufficientStats& stats, const CiHypothesis& h,
                     const CiTestConfig& cfg) {
    cfg.validate();
    CiTestResult res;
    res.n_effective = stats.n;
    res.partial_corr = partial_correlation(stats, h);
    res.g2 = clrt_statistic(res.partial_corr, stats.n);
    res.lambda_hat = estimate_lambda(pm, h, cfg);
    const double stat = cfg.rescale ? res.g2 / res.lambda_hat : res.g2;
    res.p_value = chi2_1_sf(stat);
    res.independent = res.p_value >= cfg.alpha;
    return res;
}

double chi2_1_sf(double x) {
    if (!(x > 0.0)) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

double chi2_1_cdf(double x) {
    if (!(x > 0.0)) return 0.0;
    return std::erf(std::sqrt(x / 2.0));
}

double chi2_1_quantile(double prob) {
    if (!(prob >= 0.0 && prob < 1.0)) throw ArgumentError("quantile probability must lie in [0, 1)");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(1.0), prob);
}

}  // namespace tsdag
