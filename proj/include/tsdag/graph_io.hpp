#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsdag/graph.hpp"

namespace tsdag {

/// One edge of the graph file format. The target is always at lag 0 unless the
/// graph describes a whole lag window (see window_dag).
struct GraphFileEdge {
    std::string from_var;
    int from_lag = 0;
    std::string to_var;
    int to_lag = 0;
    bool undirected = false;
};

/// In-memory form of the JSON graph file:
/// {"p", "q", "variables": [...], "edges": [{"from": {"var", "lag"}, "to": {"var", "lag"}}]}
struct GraphFile {
    int p = 0;
    int q = 0;
    std::vector<std::string> variables;
    std::vector<GraphFileEdge> edges;

    TimeLayout layout() const { return {p, q}; }
    int variable_index(const std::string& name) const;
};

GraphFile parse_graph_json(const nlohmann::json& j);
GraphFile read_graph_file(const std::filesystem::path& path);
nlohmann::json to_json(const GraphFile& g);

/// Within-time DAG on the p variables, built from the lag-0 -> lag-0 edges.
Dag within_time_dag(const GraphFile& g);

/// Graph file for the edges of a window PDAG; lag >= 1 edges are always directed.
GraphFile pdag_to_graph_file(const Pdag& g, const TimeLayout& layout, const std::vector<std::string>& variables);

/// Display name "VAR" at lag 0, "VAR[t-l]" otherwise.
std::string node_label(NodeId n, const TimeLayout& layout, const std::vector<std::string>& variables);

}  // namespace tsdag
