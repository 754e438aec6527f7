#include "tsdag/graph_io.hpp"

#include <fstream>
#include <set>

#include "tsdag/errors.hpp"

namespace tsdag {

using nlohmann::json;

int GraphFile::variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

void parse_endpoint(const json& j, const char* side, std::string& var, int& lag) {
    if (!j.contains(side) || !j.at(side).is_object())
        throw ParseError(std::string("edge is missing the '") + side + "' endpoint");
    const json& e = j.at(side);
    if (!e.contains("var") || !e.at("var").is_string())
        throw ParseError(std::string("edge endpoint '") + side + "' has no string 'var'");
    var = e.at("var").get<std::string>();
    lag = e.value("lag", 0);
}

}  // namespace

GraphFile parse_graph_json(const json& j) {
    if (!j.is_object()) throw ParseError("graph file must be a JSON object");
    GraphFile g;
    try {
        g.variables = j.at("variables").get<std::vector<std::string>>();
        g.p = j.value("p", static_cast<int>(g.variables.size()));
        g.q = j.value("q", 0);
    } catch (const json::exception& e) {
        throw ParseError(std::string("graph file: ") + e.what());
    }
    if (g.variables.empty()) throw ParseError("graph file declares no variables");
    if (g.p != static_cast<int>(g.variables.size()))
        throw ParseError("graph file: p=" + std::to_string(g.p) + " but " + std::to_string(g.variables.size()) +
                         " variable names");
    if (g.q < 0) throw ParseError("graph file: negative q");
    std::set<std::string> seen(g.variables.begin(), g.variables.end());
    if (seen.size() != g.variables.size()) throw ParseError("graph file: duplicate variable names");

    if (!j.contains("edges")) return g;
    if (!j.at("edges").is_array()) throw ParseError("graph file: 'edges' must be an array");
    std::size_t row = 0;
    for (const json& e : j.at("edges")) {
        ++row;
        GraphFileEdge edge;
        try {
            parse_endpoint(e, "from", edge.from_var, edge.from_lag);
            parse_endpoint(e, "to", edge.to_var, edge.to_lag);
            edge.undirected = e.value("undirected", false);
        } catch (const ParseError& err) {
            throw ParseError(std::string(err.what()) + " (edge " + std::to_string(row) + ")", row);
        } catch (const json::exception& err) {
            throw ParseError(std::string("edge ") + std::to_string(row) + ": " + err.what(), row);
        }
        if (g.variable_index(edge.from_var) < 0 || g.variable_index(edge.to_var) < 0)
            throw ParseError("edge " + std::to_string(row) + " names an unknown variable", row);
        if (edge.from_lag < 0 || edge.from_lag > g.q || edge.to_lag < 0 || edge.to_lag > g.q)
            throw ParseError("edge " + std::to_string(row) + " has a lag outside [0, q]", row);
        if (edge.from_lag < edge.to_lag)
            throw ParseError("edge " + std::to_string(row) + " points backwards in time", row);
        g.edges.push_back(std::move(edge));
    }
    return g;
}

GraphFile read_graph_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open graph file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("graph file " + path.string() + ": " + e.what(), 0, e.byte);
    }
    return parse_graph_json(j);
}

json to_json(const GraphFile& g) {
    json edges = json::array();
    for (const auto& e : g.edges) {
        json je = {{"from", {{"var", e.from_var}, {"lag", e.from_lag}}}, {"to", {{"var", e.to_var}, {"lag", e.to_lag}}}};
        if (e.undirected) je["undirected"] = true;
        edges.push_back(std::move(je));
    }
    return {{"p", g.p}, {"q", g.q}, {"variables", g.variables}, {"edges", std::move(edges)}};
}

Dag within_time_dag(const GraphFile& g) {
    Dag dag(g.p);
    for (const auto& e : g.edges) {
        if (e.from_lag != 0 || e.to_lag != 0) continue;
        if (e.undirected) throw ArgumentError("within-time DAG cannot contain undirected edges");
        dag.add_edge(g.variable_index(e.from_var), g.variable_index(e.to_var));
    }
    return dag;
}

GraphFile pdag_to_graph_file(const Pdag& g, const TimeLayout& layout, const std::vector<std::string>& variables) {
    if (layout.node_count() != g.node_count() || static_cast<int>(variables.size()) != layout.p)
        throw ArgumentError("layout/variables do not match the graph");
    GraphFile out;
    out.p = layout.p;
    out.q = layout.q;
    out.variables = variables;
    auto edge = [&](NodeId u, NodeId v, bool undirected) {
        return GraphFileEdge{variables[layout.var_of(u)], layout.lag_of(u), variables[layout.var_of(v)],
                             layout.lag_of(v), undirected};
    };
    for (auto [u, v] : g.directed_edges()) out.edges.push_back(edge(u, v, false));
    for (auto [u, v] : g.undirected_edges()) {
        // Older endpoint first. Only the time-order-blind baseline leaves cross-time pairs undirected.
        if (layout.lag_of(u) < layout.lag_of(v)) std::swap(u, v);
        out.edges.push_back(edge(u, v, true));
    }
    return out;
}

std::string node_label(NodeId n, const TimeLayout& layout, const std::vector<std::string>& variables) {
    const std::string& name = variables.at(layout.var_of(n));
    const int lag = layout.lag_of(n);
    return lag == 0 ? name : name + "[t-" + std::to_string(lag) + "]";
}

}  // namespace tsdag
