#include "tsdag/ci_tester.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "tsdag/errors.hpp"

namespace tsdag {

std::size_t CiKeyHash::operator()(const CiKey& k) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (NodeId n : k.nodes) {
        h ^= static_cast<std::size_t>(n) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

CiKey make_ci_key(NodeId a, NodeId b, std::span<const NodeId> s) {
    CiKey k;
    k.nodes.reserve(s.size() + 2);
    k.nodes.push_back(std::min(a, b));
    k.nodes.push_back(std::max(a, b));
    k.nodes.insert(k.nodes.end(), s.begin(), s.end());
    std::sort(k.nodes.begin() + 2, k.nodes.end());
    return k;
}

// ---------------------------------------------------------------- oracle

namespace {

bool any(const OracleBits& x) {
    for (auto w : x)
        if (w) return true;
    return false;
}

template <typename F>
void for_each_bit(const OracleBits& x, F&& f) {
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::uint64_t w = x[i]; w; w &= w - 1) f(static_cast<int>(i * 64) + std::countr_zero(w));
}

bool test_bit(const OracleBits& x, int i) { return x[i / 64] >> (i % 64) & 1; }
void set_bit(OracleBits& x, int i) { x[i / 64] |= std::uint64_t{1} << (i % 64); }

}  // namespace

OracleCiTester::OracleCiTester(Dag dag) : dag_(std::move(dag)) {
    if (dag_.node_count() <= kOracleBitNodes) {
        parent_mask_.assign(dag_.node_count(), OracleBits{});
        child_mask_.assign(dag_.node_count(), OracleBits{});
        for (auto [u, v] : dag_.edges()) {
            set_bit(child_mask_[u], v);
            set_bit(parent_mask_[v], u);
        }
    }
}

// Bit-parallel reachability (Bayes ball) for graphs of at most kOracleBitNodes nodes. Returns the
// length of the shortest active path from a to b, or 0 when they are d-separated.
int OracleCiTester::connection_length(NodeId a, NodeId b, const OracleBits& zmask) const {
    OracleBits anc = zmask, frontier = zmask;
    while (any(frontier)) {
        OracleBits next{};
        for_each_bit(frontier, [&](int f) {
            for (std::size_t i = 0; i < next.size(); ++i) next[i] |= parent_mask_[f][i];
        });
        for (std::size_t i = 0; i < next.size(); ++i) {
            frontier[i] = next[i] & ~anc[i];
            anc[i] |= next[i];
        }
    }
    OracleBits up{}, down{};  // visited, by arrival direction
    OracleBits up_todo{}, down_todo{};
    set_bit(up_todo, a);
    for (int step = 0; any(up_todo) || any(down_todo); ++step) {
        if (test_bit(up_todo, b) || test_bit(down_todo, b)) return step;
        OracleBits new_up{}, new_down{};
        for_each_bit(up_todo, [&](int y) {
            set_bit(up, y);
            if (test_bit(zmask, y)) return;
            for (std::size_t i = 0; i < new_up.size(); ++i) {
                new_up[i] |= parent_mask_[y][i];
                new_down[i] |= child_mask_[y][i];
            }
        });
        for_each_bit(down_todo, [&](int y) {
            set_bit(down, y);
            const bool in_z = test_bit(zmask, y);
            const bool in_anc = test_bit(anc, y);
            for (std::size_t i = 0; i < new_up.size(); ++i) {
                if (!in_z) new_down[i] |= child_mask_[y][i];
                if (in_anc) new_up[i] |= parent_mask_[y][i];
            }
        });
        for (std::size_t i = 0; i < up.size(); ++i) {
            up_todo[i] = new_up[i] & ~up[i];
            down_todo[i] = new_down[i] & ~down[i];
        }
    }
    return 0;
}

CiDecision OracleCiTester::test(NodeId a, NodeId b, std::span<const NodeId> s) {
    CiKey key = make_ci_key(a, b, s);
    auto it = cache_.find(key);
    int length;
    if (it != cache_.end()) {
        length = it->second;
    } else {
        ++evaluations_;
        if (!parent_mask_.empty()) {
            const int n = dag_.node_count();
            auto valid = [n](NodeId x) { return x >= 0 && x < n; };
            if (!valid(a) || !valid(b) || a == b) throw ArgumentError("invalid oracle query");
            OracleBits z{};
            for (NodeId x : s) {
                if (!valid(x) || x == a || x == b) throw ArgumentError("invalid oracle conditioning set");
                set_bit(z, x);
            }
            length = connection_length(a, b, z);
        } else {
            length = d_separated(dag_, a, b, s) ? 0 : 1;
        }
        cache_.emplace(std::move(key), length);
    }
    if (length == 0) return {true, 1.0};
    // Dependence gets a tiny p-value that grows with the active path length, so the
    // max-min heuristic sees nearby nodes as more strongly associated.
    return {false, kOracleDistanceScale * (1.0 - 1.0 / length)};
}

// ---------------------------------------------------------------- Gaussian

GaussianCiEngine::GaussianCiEngine(std::shared_ptr<const PiledMatrix> pm, bool center, std::optional<int> bandwidth,
                                   bool prewhiten)
    : pm_(std::move(pm)), stats_(sufficient_stats(*pm_, center)), prewhiten_(prewhiten) {
    if (bandwidth && *bandwidth < 0) throw ArgumentError("bandwidth must be non-negative");
    bandwidth_ = bandwidth.value_or(default_bandwidth(pm_->rows(), pm_->q));
    // Residuals always come from the centred data so lambda is location invariant.
    centered_ = pm_->data.rowwise() - stats_.means.transpose();
    centred_cov_ = center ? stats_.covariance : sufficient_stats(*pm_, true).covariance;
}

RawCiStatistic GaussianCiEngine::compute(const CiKey& key) const {
    RawCiStatistic out;
    const NodeId a = key.nodes[0];
    const NodeId b = key.nodes[1];
    const std::vector<NodeId> s(key.nodes.begin() + 2, key.nodes.end());
    try {
        const CiHypothesis h{a, b, s};
        out.partial_corr = partial_correlation(stats_, h);
        out.g2 = clrt_statistic(out.partial_corr, stats_.n);

        // Constrained-fit residuals: a and b each regressed on s.
        const auto ra = detail::regress(centred_cov_, a, s);
        const auto rb = detail::regress(centred_cov_, b, s);
        Eigen::VectorXd ea = centered_.col(a);
        Eigen::VectorXd eb = centered_.col(b);
        for (std::size_t i = 0; i < s.size(); ++i) {
            ea.noalias() -= ra.coef(static_cast<Eigen::Index>(i)) * centered_.col(s[i]);
            eb.noalias() -= rb.coef(static_cast<Eigen::Index>(i)) * centered_.col(s[i]);
        }
        out.lambda_hat = detail::lambda_from_residuals(*pm_, ea, eb, bandwidth_, prewhiten_);
    } catch (const NumericalError& e) {
        out.error = e.what();
    }
    return out;
}

const RawCiStatistic& GaussianCiEngine::raw(NodeId a, NodeId b, std::span<const NodeId> s) {
    CiKey key = make_ci_key(a, b, s);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    CiHypothesis{a, b, std::vector<NodeId>(s.begin(), s.end())}.validate(static_cast<int>(stats_.covariance.rows()));
    ++evaluations_;
    RawCiStatistic r = compute(key);
    return cache_.emplace(std::move(key), std::move(r)).first->second;
}

GaussianCiTester::GaussianCiTester(std::shared_ptr<GaussianCiEngine> engine, CiTestConfig cfg)
    : engine_(std::move(engine)), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.bandwidth && *cfg_.bandwidth != engine_->bandwidth())
        throw ArgumentError("tester bandwidth differs from the engine's");
    if (cfg_.prewhiten != engine_->prewhiten()) throw ArgumentError("tester prewhitening differs from the engine's");
}

CiTestResult GaussianCiTester::result(const CiHypothesis& h) {
    const RawCiStatistic& r = engine_->raw(h.a, h.b, h.s);
    if (!r.error.empty()) throw SingularityError(r.error);
    CiTestResult res;
    res.partial_corr = r.partial_corr;
    res.g2 = r.g2;
    res.lambda_hat = std::max(cfg_.lambda_floor, r.lambda_hat);
    res.n_effective = engine_->stats().n;
    res.p_value = chi2_1_sf(cfg_.rescale ? res.g2 / res.lambda_hat : res.g2);
    res.independent = res.p_value >= cfg_.alpha;
    return res;
}

CiDecision GaussianCiTester::test(NodeId a, NodeId b, std::span<const NodeId> s) {
    const RawCiStatistic& r = engine_->raw(a, b, s);
    if (!r.error.empty()) throw SingularityError(r.error);
    const double lambda = std::max(cfg_.lambda_floor, r.lambda_hat);
    const double p = chi2_1_sf(cfg_.rescale ? r.g2 / lambda : r.g2);
    return {p >= cfg_.alpha, p};
}

}  // namespace tsdag
