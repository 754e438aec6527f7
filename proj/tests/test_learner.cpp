#include <doctest.h>

#include <random>

#include "checks.hpp"
#include "tsdag/alarm.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/graph_io.hpp"
#include "tsdag/local_learner.hpp"
#include "tsdag/simgen.hpp"

using namespace tsdag;

namespace {

DynamicSem alarm_sem() {
    return extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
}

LocalStructure learn_oracle(const DynamicSem& sem, int var, int depth, std::optional<int> cap) {
    OracleCiTester oracle(sem.window_dag());
    LearnConfig lc;
    lc.depth = depth;
    lc.mmpc.max_sepset_size = cap;
    return learn_local(oracle, sem.layout(), sem.layout().node(var, 0), lc);
}

Dag make_dag(int n, std::initializer_list<std::pair<NodeId, NodeId>> edges) {
    Dag d(n);
    for (auto [a, b] : edges) d.add_edge(a, b);
    return d;
}

}  // namespace

TEST_CASE("isolated target yields only its self-lag") {
    const DynamicSem sem = extend_to_dynamic(make_dag(3, {{1, 2}}));
    const LocalStructure ls = learn_oracle(sem, 0, 1, std::nullopt);
    CHECK(ls.pc() == NodeSet{sem.layout().node(0, 1)});
    CHECK(ls.graph.is_directed(sem.layout().node(0, 1), sem.layout().node(0, 0)));
    CHECK(ls.children().empty());
}

TEST_CASE("collider at the target is oriented at d=1") {
    const DynamicSem sem = extend_to_dynamic(make_dag(3, {{0, 2}, {1, 2}}));
    const TimeLayout lay = sem.layout();
    const LocalStructure ls = learn_oracle(sem, 2, 1, std::nullopt);
    CHECK(ls.graph.is_directed(lay.node(0, 0), lay.node(2, 0)));
    CHECK(ls.graph.is_directed(lay.node(1, 0), lay.node(2, 0)));
}

TEST_CASE("chain through the target matches the time-ordered CPDAG") {
    const DynamicSem sem = extend_to_dynamic(make_dag(3, {{0, 1}, {1, 2}}));
    const Dag w = sem.window_dag();
    const Pdag ref = cpdag(w, sem.layout());
    const LocalStructure ls = learn_oracle(sem, 1, 1, std::nullopt);
    const auto c = checks::check_oracle_target(w, ref, ls);
    CHECK_MESSAGE(c.ok(), c.detail);
    const TimeLayout lay = sem.layout();
    CHECK(ls.graph.is_directed(lay.node(1, 1), lay.node(1, 0)));
    for (auto [a, b] : ls.graph.directed_edges()) CHECK(ref.is_directed(a, b));
}

TEST_CASE("ALARM oracle d=1: every target exact") {
    const DynamicSem sem = alarm_sem();
    const Dag w = sem.window_dag();
    const Pdag ref = cpdag(w, sem.layout());
    int cap = 0;
    for (NodeId n = 0; n < w.node_count(); ++n) cap = std::max(cap, static_cast<int>(w.parents(n).size()));
    for (int v = 0; v < sem.p(); ++v) {
        const LocalStructure ls = learn_oracle(sem, v, 1, cap);
        const auto c = checks::check_oracle_target(w, ref, ls);
        CHECK_MESSAGE(c.ok(), alarm_graph().variables[v] << c.detail);
    }
}

TEST_CASE("ALARM worked example around VENTLUNG") {
    const DynamicSem sem = alarm_sem();
    const TimeLayout lay = sem.layout();
    const Dag w = sem.window_dag();
    const Pdag ref = cpdag(w, lay);
    const NodeId t = lay.node(alarm_ventlung, 0);
    auto node = [&](int one_based) { return lay.node(one_based - 1, 0); };

    SUBCASE("part I at d=2 builds layer 1 from the same-time PC") {
        OracleCiTester oracle(w);
        LearnConfig lc;
        lc.depth = 2;
        lc.mmpc.max_sepset_size = 5;
        const LocalStructure ls = learn_local_part1(oracle, lay, t, lc);
        NodeSet want;
        for (NodeId n : w.parents(t))
            if (lay.is_current(n)) want.insert(n);
        for (NodeId n : w.children(t)) want.insert(n);
        CHECK(ls.layers[1] == want);
        CHECK(ls.graph.is_directed(lay.node(alarm_ventlung, 1), t));
    }
    SUBCASE("part II seeds W from node 18 with leaves 14 and 15 only among the listed nodes") {
        const LocalStructure ls = learn_oracle(sem, alarm_ventlung, 2, 5);
        NodeSet leaves;
        for (const PathRecord& r : ls.part2_seed)
            if (r.path == std::vector<NodeId>{node(18)}) {
                CHECK(r.length == 1);
                leaves.insert(r.leaf);
            }
        CHECK(leaves.contains(node(14)));
        CHECK(leaves.contains(node(15)));
        CHECK_FALSE(leaves.contains(node(20)));
        CHECK_FALSE(leaves.contains(node(16)));
        CHECK_FALSE(leaves.contains(lay.node(17, 1)));
    }
    SUBCASE("d=2: every edge in the first two layers is oriented and correct") {
        const LocalStructure ls = learn_oracle(sem, alarm_ventlung, 2, 5);
        CHECK(ls.part2_run);
        const auto c = checks::check_within_depth(w, ref, ls);
        CHECK_MESSAGE(c.ok(), c.detail);
        for (NodeId u : ls.layered_nodes()) CHECK(ls.graph.neighbors(u).empty());
        CHECK(ls.layers[2].size() > 0);
    }
}

TEST_CASE("exhaustive suite on DAGs with up to 4 nodes, d=2, unbounded cap") {
    LearnConfig lc;
    lc.depth = 2;
    lc.mmpc.max_sepset_size.reset();
    int failures = 0;
    for (int n = 1; n <= 4; ++n)
        for (const Dag& d : checks::all_dags(n)) {
            const DynamicSem sem = extend_to_dynamic(d);
            const Dag w = sem.window_dag();
            const Pdag ref = cpdag(w, sem.layout());
            OracleCiTester oracle(w);
            for (int v = 0; v < n; ++v) {
                const LocalStructure ls = learn_local(oracle, sem.layout(), sem.layout().node(v, 0), lc);
                if (!checks::check_within_depth(w, ref, ls).ok()) ++failures;
            }
        }
    CHECK(failures == 0);
}

TEST_CASE("random 6-node graphs at depths 1 to 3") {
    std::mt19937_64 rng(99);
    std::bernoulli_distribution edge(0.35);
    for (int trial = 0; trial < 40; ++trial) {
        Dag d(6);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j)
                if (edge(rng)) d.add_edge(i, j);
        const DynamicSem sem = extend_to_dynamic(d);
        const Dag w = sem.window_dag();
        const Pdag ref = cpdag(w, sem.layout());
        for (int depth = 1; depth <= 3; ++depth) {
            OracleCiTester oracle(w);
            LearnConfig lc;
            lc.depth = depth;
            lc.mmpc.max_sepset_size.reset();
            const int v = static_cast<int>(rng() % 6);
            const LocalStructure ls = learn_local(oracle, sem.layout(), sem.layout().node(v, 0), lc);
            const auto c = checks::check_within_depth(w, ref, ls);
            CHECK_MESSAGE(c.ok(), "trial " << trial << " depth " << depth << c.detail);
        }
    }
}

TEST_CASE("baseline mode leaves time order unused") {
    const DynamicSem sem = extend_to_dynamic(make_dag(2, {}));
    OracleCiTester oracle(sem.window_dag());
    LearnConfig lc;
    lc.ignore_time_order = true;
    const LocalStructure ls = learn_local(oracle, sem.layout(), sem.layout().node(0, 0), lc);
    CHECK_FALSE(ls.time_order);
    CHECK(ls.graph.is_undirected(sem.layout().node(0, 1), sem.layout().node(0, 0)));
}

TEST_CASE("argument checks") {
    const DynamicSem sem = extend_to_dynamic(make_dag(2, {}));
    OracleCiTester oracle(sem.window_dag());
    LearnConfig lc;
    CHECK_THROWS_AS(learn_local(oracle, sem.layout(), 0, lc), ArgumentError);  // lagged target
    CHECK_THROWS_AS(learn_local(oracle, sem.layout(), 9, lc), ArgumentError);
    CHECK_THROWS_AS(learn_local(oracle, TimeLayout{3, 1}, 3, lc), ArgumentError);
    lc.depth = 0;
    CHECK_THROWS_AS(learn_local(oracle, sem.layout(), 2, lc), ArgumentError);
}

TEST_CASE("local structure JSON carries layers and sepsets") {
    const DynamicSem sem = extend_to_dynamic(make_dag(3, {{0, 2}, {1, 2}}));
    const LocalStructure ls = learn_oracle(sem, 2, 1, std::nullopt);
    const auto j = local_structure_to_json(ls, {"a", "b", "c"});
    CHECK(j.at("target").at("var") == "c");
    CHECK(j.at("layers").size() == 2);
    CHECK(j.at("sepsets").size() > 0);
}
