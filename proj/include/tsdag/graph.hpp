#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tsdag {

/// Index of a node in the lag window. Variable g at lag l lives at (q - l) * p + g,
/// so the current-time block is the last p indices.
using NodeId = std::int32_t;
using NodeSet = std::set<NodeId>;

/// Maps (variable, lag) pairs onto window node indices for p variables and lag q.
struct TimeLayout {
    int p = 0;
    int q = 0;

    int node_count() const { return p * (q + 1); }
    NodeId node(int var, int lag) const;
    int var_of(NodeId n) const { return n % p; }
    int lag_of(NodeId n) const { return q - n / p; }
    bool is_current(NodeId n) const { return n >= p * q; }
    bool valid(NodeId n) const { return n >= 0 && n < node_count(); }

    bool operator==(const TimeLayout&) const = default;
};

/// Directed acyclic graph over nodes 0..node_count-1. Acyclicity is enforced on
/// construction and on every added edge.
class Dag {
public:
    Dag() = default;
    explicit Dag(int node_count);
    Dag(int node_count, std::span<const std::pair<NodeId, NodeId>> edges);

    int node_count() const { return static_cast<int>(parents_.size()); }

    /// Throws ArgumentError if the edge would close a directed cycle.
    void add_edge(NodeId from, NodeId to);
    bool has_edge(NodeId from, NodeId to) const;
    bool adjacent(NodeId a, NodeId b) const { return has_edge(a, b) || has_edge(b, a); }

    const NodeSet& parents(NodeId n) const { return parents_.at(check(n)); }
    const NodeSet& children(NodeId n) const { return children_.at(check(n)); }
    std::vector<std::pair<NodeId, NodeId>> edges() const;
    std::size_t edge_count() const;

    std::vector<NodeId> topological_order() const;
    bool has_directed_path(NodeId from, NodeId to) const;
    NodeSet ancestors_of(std::span<const NodeId> nodes) const;

    bool operator==(const Dag&) const = default;

private:
    NodeId check(NodeId n) const;

    std::vector<NodeSet> parents_;
    std::vector<NodeSet> children_;
};

/// Mixed graph with directed and undirected edges. At most one edge per pair and
/// the directed part stays acyclic.
class Pdag {
public:
    Pdag() = default;
    explicit Pdag(int node_count);

    int node_count() const { return static_cast<int>(parents_.size()); }

    /// Adds from -> to. Throws ArgumentError if the pair is already adjacent in
    /// another form or the edge would create a directed cycle.
    void add_directed(NodeId from, NodeId to);
    void add_undirected(NodeId a, NodeId b);
    /// Turns the undirected edge a - b into a -> b.
    void orient(NodeId from, NodeId to);
    void remove_edge(NodeId a, NodeId b);

    bool adjacent(NodeId a, NodeId b) const;
    bool is_directed(NodeId from, NodeId to) const;
    bool is_undirected(NodeId a, NodeId b) const;

    const NodeSet& parents(NodeId n) const { return parents_.at(check(n)); }
    const NodeSet& children(NodeId n) const { return children_.at(check(n)); }
    const NodeSet& neighbors(NodeId n) const { return neighbors_.at(check(n)); }
    NodeSet adjacents(NodeId n) const;

    std::vector<std::pair<NodeId, NodeId>> directed_edges() const;
    /// Each undirected edge once, as (smaller, larger).
    std::vector<std::pair<NodeId, NodeId>> undirected_edges() const;

    /// True if a directed path from -> ... -> to exists (length >= 1).
    bool has_directed_path(NodeId from, NodeId to) const;
    /// True if orienting from -> to would close a directed cycle.
    bool would_create_cycle(NodeId from, NodeId to) const { return has_directed_path(to, from); }

    bool operator==(const Pdag&) const = default;

private:
    NodeId check(NodeId n) const;

    std::vector<NodeSet> parents_;
    std::vector<NodeSet> children_;
    std::vector<NodeSet> neighbors_;
};

/// Separator sets for non-adjacent pairs, keyed by the unordered pair.
class SepsetRegistry {
public:
    /// Keeps the first separator recorded for a pair; returns false if one existed.
    bool record(NodeId a, NodeId b, NodeSet separator);
    const NodeSet* find(NodeId a, NodeId b) const;
    bool contains(NodeId a, NodeId b) const { return find(a, b) != nullptr; }
    std::size_t size() const { return sets_.size(); }
    void merge(const SepsetRegistry& other);
    const std::map<std::pair<NodeId, NodeId>, NodeSet>& entries() const { return sets_; }

private:
    static std::pair<NodeId, NodeId> key(NodeId a, NodeId b);
    std::map<std::pair<NodeId, NodeId>, NodeSet> sets_;
};

struct VStructure {
    NodeId a;
    NodeId b;  // collider
    NodeId c;
    auto operator<=>(const VStructure&) const = default;
};

/// True iff every path between a and b is blocked by z.
bool d_separated(const Dag& dag, NodeId a, NodeId b, std::span<const NodeId> z);

/// Every triple a -> b <- c of the DAG with a, c non-adjacent, as (min(a,c), b, max(a,c)).
std::vector<VStructure> v_structures(const Dag& dag);
Pdag skeleton(const Dag& dag);

/// Orients a -> b <- c for every unshielded triple a - b - c of g with b outside the
/// separator of {a, c}. `restrict_to`, when given, limits the search to triples that
/// contain that node. Triples whose pair lacks a separator are skipped and reported
/// through `diagnostics`. Orientations that conflict with existing directions or
/// would close a cycle are also skipped and reported.
std::vector<VStructure> find_v_structures(Pdag& g, const SepsetRegistry& sepsets,
                                          std::optional<NodeId> restrict_to = std::nullopt,
                                          std::vector<std::string>* diagnostics = nullptr);

/// Applies Meek rules R1-R4 until no undirected edge can be oriented.
Pdag meek_closure(Pdag g);
/// In-place variant; returns the number of edges oriented.
int apply_meek_rules(Pdag& g);

/// Completed PDAG of the Markov equivalence class of dag.
Pdag cpdag(const Dag& dag);
/// As above with time order as background knowledge: edges between different lag
/// blocks are fixed earlier -> later before closing under the Meek rules.
Pdag cpdag(const Dag& dag, const TimeLayout& layout);

}  // namespace tsdag
