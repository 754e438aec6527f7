#include <doctest.h>

#include <algorithm>

#include "tsdag/alarm.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/graph_io.hpp"
#include "tsdag/mmpc.hpp"
#include "tsdag/simgen.hpp"

using namespace tsdag;

namespace {

Dag make_dag(int n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
    Dag d(n);
    for (auto [a, b] : edges) d.add_edge(a, b);
    return d;
}

NodeSet as_set(const std::vector<NodeId>& v) { return {v.begin(), v.end()}; }

// Scripted tester: independent exactly for the listed (a, b, s) triples.
class ScriptedTester final : public CiTester {
public:
    ScriptedTester(int n, std::vector<std::tuple<NodeId, NodeId, NodeSet>> indep) : n_(n), indep_(std::move(indep)) {}
    int node_count() const override { return n_; }
    CiDecision test(NodeId a, NodeId b, std::span<const NodeId> s) override {
        ++calls_;
        const NodeSet ss(s.begin(), s.end());
        for (const auto& [x, y, z] : indep_)
            if (((x == a && y == b) || (x == b && y == a)) && z == ss) return {true, 0.5};
        return {false, 0.001};
    }
    std::size_t evaluations() const override { return calls_; }

private:
    int n_;
    std::vector<std::tuple<NodeId, NodeId, NodeSet>> indep_;
    std::size_t calls_ = 0;
};

class FailingTester final : public CiTester {
public:
    int node_count() const override { return 3; }
    CiDecision test(NodeId, NodeId, std::span<const NodeId>) override { throw SingularityError("singular"); }
    std::size_t evaluations() const override { return 0; }
};

}  // namespace

TEST_CASE("subsets are enumerated smallest first") {
    const std::vector<NodeId> pool{4, 7, 9};
    std::vector<std::vector<NodeId>> seen;
    for_each_subset(std::span<const NodeId>(pool), 2, [&](std::span<const NodeId> s) {
        seen.emplace_back(s.begin(), s.end());
        return false;
    });
    const std::vector<std::vector<NodeId>> want{{}, {4}, {7}, {9}, {4, 7}, {4, 9}, {7, 9}};
    CHECK(seen == want);
}

TEST_CASE("min_assoc with empty CPCD uses the marginal test") {
    OracleCiTester oracle(make_dag(3, {{0, 1}}));
    MmpcConfig cfg;
    MmpcContext ctx(oracle, cfg);
    CHECK(min_assoc(ctx, 0, 1, {}).value > 0.0);
    CHECK(min_assoc(ctx, 0, 2, {}).value == 0.0);
}

TEST_CASE("min_assoc finds a separating subset of CPCD") {
    OracleCiTester oracle(make_dag(3, {{0, 1}, {1, 2}}));  // u -> w -> v
    MmpcConfig cfg;
    MmpcContext ctx(oracle, cfg);
    const std::vector<NodeId> cpcd{1};
    const Association a = min_assoc(ctx, 0, 2, cpcd);
    CHECK(a.value == 0.0);
    CHECK(a.witness == NodeSet{1});
}

TEST_CASE("forward phase on simple graphs") {
    SUBCASE("isolated node") {
        OracleCiTester oracle(make_dag(4, {{1, 2}, {2, 3}}));
        MmpcConfig cfg;
        MmpcContext ctx(oracle, cfg);
        CHECK(mmpc_forward(ctx, 0).empty());
    }
    SUBCASE("star with three children") {
        OracleCiTester oracle(make_dag(5, {{0, 1}, {0, 2}, {0, 3}}));
        MmpcConfig cfg;
        MmpcContext ctx(oracle, cfg);
        const NodeSet got = as_set(mmpc_forward(ctx, 0));
        const NodeSet children{1, 2, 3};
        CHECK(std::includes(got.begin(), got.end(), children.begin(), children.end()));
    }
}

TEST_CASE("forward phase on ALARM VENTLUNG covers its PC and self-lag") {
    const DynamicSem sem = extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
    const Dag w = sem.window_dag();
    const NodeId t = sem.layout().node(alarm_ventlung, 0);
    OracleCiTester oracle(w);
    MmpcConfig cfg;
    MmpcContext ctx(oracle, cfg);
    const NodeSet got = as_set(mmpc_forward(ctx, t));
    for (NodeId n : w.parents(t)) CHECK(got.contains(n));
    for (NodeId n : w.children(t)) CHECK(got.contains(n));
    CHECK(got.contains(sem.layout().node(alarm_ventlung, 1)));
}

TEST_CASE("backward phase leaves an exact CPCD unchanged on a tree") {
    // 7-node tree rooted at 0.
    OracleCiTester oracle(make_dag(7, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}}));
    MmpcConfig cfg;
    MmpcContext ctx(oracle, cfg);
    const PcdResult r = mmpc_backward(ctx, 1, {0, 3, 4});
    CHECK(as_set(r.pcd) == NodeSet{0, 3, 4});
}

TEST_CASE("backward phase removes an early entrant separated by a later one") {
    OracleCiTester oracle(make_dag(3, {{0, 1}, {1, 2}}));  // 0 -> 1 -> 2
    MmpcConfig cfg;
    MmpcContext ctx(oracle, cfg);
    const PcdResult r = mmpc_backward(ctx, 0, {2, 1});
    CHECK(r.pcd == std::vector<NodeId>{1});
    REQUIRE(r.sepsets.find(0, 2) != nullptr);
    CHECK(*r.sepsets.find(0, 2) == NodeSet{1});
}

TEST_CASE("find_pcd with a scripted tester and the cap") {
    // 0 independent of 3 only given {1, 2}; a cap of 1 cannot find it.
    ScriptedTester tester(4, {{0, 3, NodeSet{1, 2}}});
    MmpcConfig capped;
    capped.max_sepset_size = 1;
    CHECK(find_pcd(tester, 0, capped).contains(3));
    MmpcConfig wide;
    wide.max_sepset_size = 2;
    const PcdResult r = find_pcd(tester, 0, wide);
    CHECK_FALSE(r.contains(3));
    CHECK(*r.sepsets.find(0, 3) == NodeSet{1, 2});
}

TEST_CASE("numerical failures count as dependence and are recorded") {
    FailingTester tester;
    const PcdResult r = find_pcd(tester, 0, MmpcConfig{});
    CHECK(as_set(r.pcd) == NodeSet{1, 2});
    CHECK_FALSE(r.failed_tests.empty());
    CHECK_FALSE(r.diagnostics.empty());
}

TEST_CASE("config validation") {
    MmpcConfig cfg;
    cfg.max_sepset_size = -1;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}
