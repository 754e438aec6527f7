#include "tsdag/local_learner.hpp"

#include <algorithm>
#include <deque>

#include "tsdag/errors.hpp"
#include "tsdag/graph_io.hpp"

namespace tsdag {

namespace {

constexpr std::size_t kMaxPathRecords = 200000;

class LearnerState {
public:
    LearnerState(LocalStructure& ls, CiTester& tester, const LearnConfig& cfg)
        : ls_(ls), tester_(tester), cfg_(cfg) {}

    bool same_time(NodeId n) const { return !ls_.time_order || ls_.layout.is_current(n); }

    std::vector<NodeId> same_time_subset(const std::vector<NodeId>& nodes) const {
        std::vector<NodeId> out;
        for (NodeId n : nodes)
            if (same_time(n)) out.push_back(n);
        return out;
    }

    // Computes PCD[x], adds lagged parents and mutual edges, then orients.
    void visit(NodeId x) {
        if (ls_.visited(x)) return;
        PcdResult res = find_pcd(tester_, x, cfg_.mmpc);
        ls_.test_count += res.test_count;
        for (auto& d : res.diagnostics) ls_.diagnostics.push_back("PCD[" + std::to_string(x) + "]: " + d);
        ls_.sepsets.merge(res.sepsets);
        ls_.failed_tests.insert(ls_.failed_tests.end(), res.failed_tests.begin(), res.failed_tests.end());

        std::vector<NodeId> full = res.pcd;
        std::sort(full.begin(), full.end());
        for (NodeId z : full)
            if (!same_time(z) && !ls_.graph.adjacent(z, x)) ls_.graph.add_directed(z, x);
        std::vector<NodeId> restricted = same_time_subset(full);
        ls_.pcd[x] = restricted;
        ls_.visit_order.push_back(x);

        for (NodeId y : ls_.visit_order) {
            if (y == x) continue;
            const auto& py = ls_.pcd.at(y);
            const bool mutual = std::binary_search(py.begin(), py.end(), x) &&
                                std::binary_search(restricted.begin(), restricted.end(), y);
            if (mutual && !ls_.graph.adjacent(x, y)) ls_.graph.add_undirected(x, y);
        }

        find_v_structures(ls_.graph, ls_.sepsets, x, &ls_.diagnostics);
        apply_meek_rules(ls_.graph);
    }

private:
    LocalStructure& ls_;
    CiTester& tester_;
    const LearnConfig& cfg_;
};

void push_unique(std::deque<NodeId>& q, NodeId n) {
    if (std::find(q.begin(), q.end(), n) == q.end()) q.push_back(n);
}

}  // namespace

void LearnConfig::validate() const {
    if (depth < 1) throw ArgumentError("depth must be at least 1");
    mmpc.validate();
}

NodeSet LocalStructure::layered_nodes() const {
    NodeSet out;
    for (const auto& l : layers) out.insert(l.begin(), l.end());
    return out;
}

LocalStructure learn_local_part1(CiTester& tester, const TimeLayout& layout, NodeId target, const LearnConfig& cfg) {
    cfg.validate();
    if (layout.node_count() != tester.node_count())
        throw ArgumentError("time layout does not match the tester's node count");
    if (!layout.valid(target)) throw ArgumentError("target node out of range");
    if (!layout.is_current(target)) throw ArgumentError("target must be a current-time node");

    LocalStructure ls;
    ls.target = target;
    ls.depth = cfg.depth;
    ls.layout = layout;
    ls.time_order = !cfg.ignore_time_order;
    ls.graph = Pdag(layout.node_count());
    ls.layers.assign(cfg.depth + 1, NodeSet{});
    ls.layers[0] = {target};

    LearnerState st(ls, tester, cfg);
    st.visit(target);

    NodeSet all_layers{target};
    std::vector<std::deque<NodeId>> waiting(cfg.depth + 2);
    for (NodeId v : ls.pcd.at(target)) waiting[1].push_back(v);

    int depth = 1;
    while (depth < cfg.depth && !waiting[depth].empty()) {
        const NodeId x = waiting[depth].front();
        waiting[depth].pop_front();
        st.visit(x);

        const bool linked = std::any_of(ls.layers[depth - 1].begin(), ls.layers[depth - 1].end(),
                                        [&](NodeId y) { return ls.graph.adjacent(x, y); });
        if (!all_layers.contains(x) && !ls.layers[depth].contains(x) && linked) {
            ls.layers[depth].insert(x);
            for (NodeId v : ls.pcd.at(x))
                if (!all_layers.contains(v)) push_unique(waiting[depth + 1], v);
        } else if (!all_layers.contains(x) && !ls.layers[depth].contains(x)) {
            ls.diagnostics.push_back("node " + std::to_string(x) + " dequeued from layer " + std::to_string(depth) +
                                     " but not adjacent to layer " + std::to_string(depth - 1) + "; discarded");
        }
        if (waiting[depth].empty()) {
            all_layers.insert(ls.layers[depth].begin(), ls.layers[depth].end());
            ++depth;
        }
    }
    ls.part1_depth = depth;
    return ls;
}

void learn_local_part2(LocalStructure& ls, CiTester& tester, const LearnConfig& cfg) {
    if (ls.part1_depth < ls.depth) return;  // Part I ran out of nodes before layer d
    ls.part2_run = true;
    LearnerState st(ls, tester, cfg);
    const NodeSet done = ls.layered_nodes();
    const int d = ls.depth;

    std::deque<PathRecord> work;
    for (NodeId u : ls.layers[d - 1]) {
        st.visit(u);
        for (NodeId v : ls.pcd.at(u))
            if (!done.contains(v)) work.push_back({v, 1, {u}});
    }
    ls.part2_seed.assign(work.begin(), work.end());

    std::size_t processed = 0;
    while (!work.empty()) {
        PathRecord rec = std::move(work.front());
        work.pop_front();
        if (++processed > kMaxPathRecords) {
            ls.diagnostics.push_back("path extension stopped after " + std::to_string(kMaxPathRecords) + " records");
            break;
        }
        bool all_undirected = true;
        for (std::size_t i = 0; i + 1 < rec.path.size(); ++i)
            if (!ls.graph.is_undirected(rec.path[i], rec.path[i + 1])) {
                all_undirected = false;
                break;
            }
        if (!all_undirected) continue;
        st.visit(rec.leaf);
        const NodeId last = rec.path.back();
        if (rec.length == 1 && ls.graph.adjacent(rec.leaf, last)) ls.layers[d].insert(rec.leaf);
        if (!ls.graph.is_undirected(rec.leaf, last)) continue;
        std::vector<NodeId> path = rec.path;
        path.push_back(rec.leaf);
        for (NodeId v : ls.pcd.at(rec.leaf)) {
            if (done.contains(v) || std::find(path.begin(), path.end(), v) != path.end()) continue;
            work.push_back({v, rec.length + 1, path});
        }
    }
}

LocalStructure learn_local(CiTester& tester, const TimeLayout& layout, NodeId target, const LearnConfig& cfg) {
    LocalStructure ls = learn_local_part1(tester, layout, target, cfg);
    learn_local_part2(ls, tester, cfg);
    return ls;
}

nlohmann::json local_structure_to_json(const LocalStructure& ls, const std::vector<std::string>& variables) {
    using nlohmann::json;
    const TimeLayout& lay = ls.layout;
    json j = to_json(pdag_to_graph_file(ls.graph, lay, variables));
    auto node = [&](NodeId n) { return json{{"var", variables.at(lay.var_of(n))}, {"lag", lay.lag_of(n)}}; };
    j["target"] = node(ls.target);
    j["depth"] = ls.depth;
    j["time_order"] = ls.time_order;
    json layers = json::array();
    for (const auto& l : ls.layers) {
        json layer = json::array();
        for (NodeId n : l) layer.push_back(node(n));
        layers.push_back(std::move(layer));
    }
    j["layers"] = std::move(layers);
    json seps = json::array();
    for (const auto& [pair, set] : ls.sepsets.entries()) {
        json s = json::array();
        for (NodeId n : set) s.push_back(node(n));
        seps.push_back({{"a", node(pair.first)}, {"b", node(pair.second)}, {"set", std::move(s)}});
    }
    j["sepsets"] = std::move(seps);
    j["test_count"] = ls.test_count;
    j["diagnostics"] = ls.diagnostics;
    return j;
}

}  // namespace tsdag
