#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsdag/ci_tester.hpp"
#include "tsdag/graph.hpp"
#include "tsdag/mmpc.hpp"

namespace tsdag {

struct LearnConfig {
    int depth = 1;
    MmpcConfig mmpc;
    /// Baseline mode: every window node is treated as a same-time variable, so no
    /// edge is oriented from time order alone.
    bool ignore_time_order = false;

    void validate() const;
};

/// Record of the layer-d extension worklist: a leaf reached from layer d-1 along `path`.
struct PathRecord {
    NodeId leaf = 0;
    int length = 1;
    std::vector<NodeId> path;
};

/// Learned neighbourhood of a target node in the lag window.
struct LocalStructure {
    NodeId target = 0;
    int depth = 1;
    TimeLayout layout;
    bool time_order = true;
    Pdag graph;
    /// L[0..]: L[0] = {target}; Part I fills the layers below depth d.
    std::vector<NodeSet> layers;
    SepsetRegistry sepsets;
    /// Nodes whose PCD has been computed, in visiting order.
    std::vector<NodeId> visit_order;
    /// PCD of each visited node restricted to same-time nodes, ascending.
    std::map<NodeId, std::vector<NodeId>> pcd;
    std::vector<std::string> diagnostics;
    std::vector<CiHypothesis> failed_tests;
    std::size_t test_count = 0;
    /// Worklist W as seeded at the start of Part II.
    std::vector<PathRecord> part2_seed;
    /// Depth counter D when Part I stopped.
    int part1_depth = 1;
    bool part2_run = false;

    bool visited(NodeId n) const { return pcd.contains(n); }
    NodeSet parents() const { return graph.parents(target); }
    NodeSet children() const { return graph.children(target); }
    NodeSet undirected_neighbors() const { return graph.neighbors(target); }
    NodeSet pc() const { return graph.adjacents(target); }
    /// Union of all layers.
    NodeSet layered_nodes() const;
};

/// Part I: layers 0..d-1 around the target with time-order orientation, v-structures
/// and Meek closure after every newly visited node.
LocalStructure learn_local_part1(CiTester& tester, const TimeLayout& layout, NodeId target, const LearnConfig& cfg);

/// Part II: visits layer-d leaves and keeps extending along all-undirected paths
/// while the newest edge stays undirected. Skipped when Part I stopped early.
void learn_local_part2(LocalStructure& ls, CiTester& tester, const LearnConfig& cfg);

LocalStructure learn_local(CiTester& tester, const TimeLayout& layout, NodeId target, const LearnConfig& cfg);

/// Graph-file JSON plus "target", "depth", "layers", "sepsets", "diagnostics".
nlohmann::json local_structure_to_json(const LocalStructure& ls, const std::vector<std::string>& variables);

}  // namespace tsdag
