#include "tsdag/mmpc.hpp"

#include <algorithm>
#include <limits>

#include "tsdag/errors.hpp"

namespace tsdag {

void MmpcConfig::validate() const {
    if (max_sepset_size && *max_sepset_size < 0) throw ArgumentError("max sepset size must be non-negative");
}

bool PcdResult::contains(NodeId v) const { return std::find(pcd.begin(), pcd.end(), v) != pcd.end(); }

MmpcContext::MmpcContext(CiTester& tester, const MmpcConfig& cfg) : tester_(tester), cfg_(cfg) { cfg_.validate(); }

int MmpcContext::max_size(std::size_t available) const {
    const int avail = static_cast<int>(available);
    return cfg_.max_sepset_size ? std::min(*cfg_.max_sepset_size, avail) : avail;
}

CiDecision MmpcContext::test(NodeId u, NodeId v, std::span<const NodeId> s) {
    ++test_count_;
    try {
        return tester_.test(u, v, s);
    } catch (const NumericalError& e) {
        diagnostics_.push_back(std::string("test treated as dependent: ") + e.what());
        failed_.push_back({u, v, std::vector<NodeId>(s.begin(), s.end())});
        return {false, 0.0};
    }
}

double MmpcContext::association(NodeId u, NodeId v, std::span<const NodeId> s) {
    const CiDecision d = test(u, v, s);
    return d.independent ? 0.0 : 1.0 - d.p_value;
}

Association min_assoc(MmpcContext& ctx, NodeId u, NodeId v, std::span<const NodeId> cpcd) {
    if (u == v) throw ArgumentError("min_assoc needs distinct nodes");
    if (std::find(cpcd.begin(), cpcd.end(), v) != cpcd.end()) throw ArgumentError("candidate already in CPCD");
    Association best{std::numeric_limits<double>::infinity(), {}};
    for_each_subset(cpcd, ctx.max_size(cpcd.size()), [&](std::span<const NodeId> z) {
        const double a = ctx.association(u, v, z);
        if (a < best.value) {
            best.value = a;
            best.witness = NodeSet(z.begin(), z.end());
        }
        return a == 0.0;
    });
    return best;
}

namespace {

std::vector<NodeId> scope_for(const MmpcContext& ctx, CiTester& tester, NodeId u) {
    std::vector<NodeId> scope = ctx.config().candidate_scope;
    if (scope.empty())
        for (NodeId v = 0; v < tester.node_count(); ++v) scope.push_back(v);
    std::sort(scope.begin(), scope.end());
    scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
    std::erase(scope, u);
    for (NodeId v : scope)
        if (v < 0 || v >= tester.node_count()) throw ArgumentError("candidate scope holds invalid node");
    return scope;
}

}  // namespace

std::vector<NodeId> mmpc_forward(MmpcContext& ctx, NodeId u, SepsetRegistry* sepsets) {
    if (u < 0 || u >= ctx.tester().node_count()) throw ArgumentError("invalid target node");
    struct Candidate {
        NodeId v;
        double min = std::numeric_limits<double>::infinity();
        NodeSet witness;
        bool alive = true;
    };
    std::vector<Candidate> cands;
    for (NodeId v : scope_for(ctx, ctx.tester(), u)) cands.push_back({v, std::numeric_limits<double>::infinity(), {}, true});

    std::vector<NodeId> cpcd;
    std::optional<NodeId> newest;
    for (;;) {
        // Only conditioning sets that contain the newest member are new since the last round.
        for (auto& c : cands) {
            if (!c.alive) continue;
            auto visit = [&](std::span<const NodeId> z) {
                const double a = ctx.association(u, c.v, z);
                if (a < c.min) {
                    c.min = a;
                    c.witness = NodeSet(z.begin(), z.end());
                }
                return a == 0.0;
            };
            if (!newest) {
                visit({});
            } else {
                std::vector<NodeId> older(cpcd.begin(), cpcd.end() - 1);
                const int top = ctx.max_size(cpcd.size());
                std::vector<NodeId> z;
                for_each_subset(older, top - 1, [&](std::span<const NodeId> rest) {
                    z.assign(rest.begin(), rest.end());
                    z.push_back(*newest);
                    return visit(z);
                });
            }
            if (c.min == 0.0) {
                c.alive = false;
                if (sepsets) sepsets->record(u, c.v, c.witness);
            }
        }
        Candidate* pick = nullptr;
        for (auto& c : cands)
            if (c.alive && (pick == nullptr || c.min > pick->min)) pick = &c;  // ties keep the lowest id
        if (pick == nullptr || !(pick->min > 0.0)) break;
        pick->alive = false;
        cpcd.push_back(pick->v);
        newest = pick->v;
    }
    return cpcd;
}

PcdResult mmpc_backward(MmpcContext& ctx, NodeId u, std::vector<NodeId> cpcd) {
    PcdResult res;
    res.node = u;
    if (std::find(cpcd.begin(), cpcd.end(), u) != cpcd.end()) throw ArgumentError("target inside its own CPCD");
    bool changed = true;
    while (changed) {
        changed = false;
        const std::vector<NodeId> snapshot = cpcd;
        for (NodeId v : snapshot) {
            std::vector<NodeId> others;
            for (NodeId w : cpcd)
                if (w != v) others.push_back(w);
            NodeSet found;
            const bool removed = for_each_subset(others, ctx.max_size(others.size()), [&](std::span<const NodeId> z) {
                if (!ctx.test(u, v, z).independent) return false;
                found = NodeSet(z.begin(), z.end());
                return true;
            });
            if (removed) {
                std::erase(cpcd, v);
                res.sepsets.record(u, v, std::move(found));
                changed = true;
            }
        }
    }
    res.pcd = std::move(cpcd);
    return res;
}

PcdResult find_pcd(CiTester& tester, NodeId u, const MmpcConfig& cfg) {
    MmpcContext ctx(tester, cfg);
    SepsetRegistry forward_seps;
    std::vector<NodeId> cpcd = mmpc_forward(ctx, u, &forward_seps);
    PcdResult res = mmpc_backward(ctx, u, std::move(cpcd));
    res.sepsets.merge(forward_seps);
    res.test_count = ctx.test_count();
    res.diagnostics = std::move(ctx.diagnostics());
    res.failed_tests = std::move(ctx.failed_tests());
    return res;
}

}  // namespace tsdag
