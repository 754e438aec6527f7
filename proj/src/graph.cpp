#include "tsdag/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "tsdag/errors.hpp"

namespace tsdag {

namespace {

std::string pair_str(NodeId a, NodeId b) {
    std::ostringstream os;
    os << "(" << a << ", " << b << ")";
    return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t row, std::size_t column)
    : std::runtime_error(what), row_(row), column_(column) {}

NodeId TimeLayout::node(int var, int lag) const {
    if (var < 0 || var >= p || lag < 0 || lag > q)
        throw ArgumentError("variable/lag out of range: var=" + std::to_string(var) +
                            " lag=" + std::to_string(lag));
    return (q - lag) * p + var;
}

// ---------------------------------------------------------------- Dag

Dag::Dag(int node_count) {
    if (node_count < 0) throw ArgumentError("negative node count");
    parents_.resize(node_count);
    children_.resize(node_count);
}

Dag::Dag(int node_count, std::span<const std::pair<NodeId, NodeId>> edges) : Dag(node_count) {
    for (auto [u, v] : edges) add_edge(u, v);
}

NodeId Dag::check(NodeId n) const {
    if (n < 0 || n >= node_count()) throw ArgumentError("invalid node index " + std::to_string(n));
    return n;
}

void Dag::add_edge(NodeId from, NodeId to) {
    check(from);
    check(to);
    if (from == to) throw ArgumentError("self loop on node " + std::to_string(from));
    if (has_edge(from, to)) return;
    if (has_edge(to, from) || has_directed_path(to, from))
        throw ArgumentError("edge " + pair_str(from, to) + " creates a directed cycle");
    children_[from].insert(to);
    parents_[to].insert(from);
}

bool Dag::has_edge(NodeId from, NodeId to) const { return children_.at(check(from)).contains(check(to)); }

std::vector<std::pair<NodeId, NodeId>> Dag::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId u = 0; u < node_count(); ++u)
        for (NodeId v : children_[u]) out.emplace_back(u, v);
    return out;
}

std::size_t Dag::edge_count() const {
    std::size_t n = 0;
    for (const auto& c : children_) n += c.size();
    return n;
}

std::vector<NodeId> Dag::topological_order() const {
    std::vector<int> indeg(node_count());
    for (NodeId v = 0; v < node_count(); ++v) indeg[v] = static_cast<int>(parents_[v].size());
    std::deque<NodeId> ready;
    for (NodeId v = 0; v < node_count(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::vector<NodeId> order;
    order.reserve(node_count());
    while (!ready.empty()) {
        NodeId u = ready.front();
        ready.pop_front();
        order.push_back(u);
        for (NodeId c : children_[u])
            if (--indeg[c] == 0) ready.push_back(c);
    }
    if (static_cast<int>(order.size()) != node_count()) throw ArgumentError("graph has a directed cycle");
    return order;
}

bool Dag::has_directed_path(NodeId from, NodeId to) const {
    check(from);
    check(to);
    std::vector<char> seen(node_count(), 0);
    std::vector<NodeId> stack(children_[from].begin(), children_[from].end());
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        if (seen[u]) continue;
        seen[u] = 1;
        for (NodeId c : children_[u]) stack.push_back(c);
    }
    return false;
}

NodeSet Dag::ancestors_of(std::span<const NodeId> nodes) const {
    NodeSet out;
    std::vector<NodeId> stack;
    for (NodeId n : nodes) stack.push_back(check(n));
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (!out.insert(u).second) continue;
        for (NodeId p : parents_[u]) stack.push_back(p);
    }
    return out;
}

// ---------------------------------------------------------------- Pdag

Pdag::Pdag(int node_count) {
    if (node_count < 0) throw ArgumentError("negative node count");
    parents_.resize(node_count);
    children_.resize(node_count);
    neighbors_.resize(node_count);
}

NodeId Pdag::check(NodeId n) const {
    if (n < 0 || n >= node_count()) throw ArgumentError("invalid node index " + std::to_string(n));
    return n;
}

bool Pdag::adjacent(NodeId a, NodeId b) const {
    check(a);
    check(b);
    return children_[a].contains(b) || parents_[a].contains(b) || neighbors_[a].contains(b);
}

bool Pdag::is_directed(NodeId from, NodeId to) const { return children_.at(check(from)).contains(check(to)); }

bool Pdag::is_undirected(NodeId a, NodeId b) const { return neighbors_.at(check(a)).contains(check(b)); }

void Pdag::add_directed(NodeId from, NodeId to) {
    if (check(from) == check(to)) throw ArgumentError("self loop on node " + std::to_string(from));
    if (is_directed(from, to)) return;
    if (adjacent(from, to)) throw ArgumentError("pair " + pair_str(from, to) + " already adjacent");
    if (would_create_cycle(from, to))
        throw ArgumentError("edge " + pair_str(from, to) + " creates a directed cycle");
    children_[from].insert(to);
    parents_[to].insert(from);
}

void Pdag::add_undirected(NodeId a, NodeId b) {
    if (check(a) == check(b)) throw ArgumentError("self loop on node " + std::to_string(a));
    if (is_undirected(a, b)) return;
    if (adjacent(a, b)) throw ArgumentError("pair " + pair_str(a, b) + " already adjacent");
    neighbors_[a].insert(b);
    neighbors_[b].insert(a);
}

void Pdag::orient(NodeId from, NodeId to) {
    if (!is_undirected(from, to)) throw ArgumentError("no undirected edge " + pair_str(from, to));
    if (would_create_cycle(from, to))
        throw ArgumentError("orienting " + pair_str(from, to) + " creates a directed cycle");
    neighbors_[from].erase(to);
    neighbors_[to].erase(from);
    children_[from].insert(to);
    parents_[to].insert(from);
}

void Pdag::remove_edge(NodeId a, NodeId b) {
    check(a);
    check(b);
    neighbors_[a].erase(b);
    neighbors_[b].erase(a);
    children_[a].erase(b);
    parents_[b].erase(a);
    children_[b].erase(a);
    parents_[a].erase(b);
}

NodeSet Pdag::adjacents(NodeId n) const {
    NodeSet out = parents(n);
    out.insert(children_[n].begin(), children_[n].end());
    out.insert(neighbors_[n].begin(), neighbors_[n].end());
    return out;
}

std::vector<std::pair<NodeId, NodeId>> Pdag::directed_edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId u = 0; u < node_count(); ++u)
        for (NodeId v : children_[u]) out.emplace_back(u, v);
    return out;
}

std::vector<std::pair<NodeId, NodeId>> Pdag::undirected_edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    for (NodeId u = 0; u < node_count(); ++u)
        for (NodeId v : neighbors_[u])
            if (u < v) out.emplace_back(u, v);
    return out;
}

bool Pdag::has_directed_path(NodeId from, NodeId to) const {
    check(from);
    check(to);
    std::vector<char> seen(node_count(), 0);
    std::vector<NodeId> stack(children_[from].begin(), children_[from].end());
    while (!stack.empty()) {
        NodeId u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        if (seen[u]) continue;
        seen[u] = 1;
        for (NodeId c : children_[u]) stack.push_back(c);
    }
    return false;
}

// ---------------------------------------------------------------- SepsetRegistry

std::pair<NodeId, NodeId> SepsetRegistry::key(NodeId a, NodeId b) { return {std::min(a, b), std::max(a, b)}; }

bool SepsetRegistry::record(NodeId a, NodeId b, NodeSet separator) {
    return sets_.emplace(key(a, b), std::move(separator)).second;
}

const NodeSet* SepsetRegistry::find(NodeId a, NodeId b) const {
    auto it = sets_.find(key(a, b));
    return it == sets_.end() ? nullptr : &it->second;
}

void SepsetRegistry::merge(const SepsetRegistry& other) {
    for (const auto& [k, s] : other.sets_) sets_.emplace(k, s);
}

// ---------------------------------------------------------------- d-separation

bool d_separated(const Dag& dag, NodeId a, NodeId b, std::span<const NodeId> z) {
    const int n = dag.node_count();
    auto valid = [n](NodeId x) { return x >= 0 && x < n; };
    if (!valid(a) || !valid(b)) throw ArgumentError("invalid node index in d-separation query");
    if (a == b) throw ArgumentError("d-separation query needs two distinct nodes");
    std::vector<char> in_z(n, 0);
    for (NodeId x : z) {
        if (!valid(x)) throw ArgumentError("invalid node index " + std::to_string(x) + " in conditioning set");
        if (x == a || x == b) throw ArgumentError("query node inside conditioning set");
        in_z[x] = 1;
    }
    const NodeSet anc = dag.ancestors_of(z);
    std::vector<char> in_anc(n, 0);
    for (NodeId x : anc) in_anc[x] = 1;

    // Reachability over (node, direction): up = entered from a child, down = from a parent.
    std::vector<char> seen_up(n, 0), seen_down(n, 0);
    std::vector<std::pair<NodeId, bool>> stack{{a, true}};
    while (!stack.empty()) {
        auto [y, up] = stack.back();
        stack.pop_back();
        auto& seen = up ? seen_up : seen_down;
        if (seen[y]) continue;
        seen[y] = 1;
        if (!in_z[y] && y == b) return false;
        if (up) {
            if (in_z[y]) continue;
            for (NodeId p : dag.parents(y)) stack.emplace_back(p, true);
            for (NodeId c : dag.children(y)) stack.emplace_back(c, false);
        } else {
            if (!in_z[y])
                for (NodeId c : dag.children(y)) stack.emplace_back(c, false);
            if (in_anc[y])
                for (NodeId p : dag.parents(y)) stack.emplace_back(p, true);
        }
    }
    return true;
}

// ---------------------------------------------------------------- skeleton / v-structures

Pdag skeleton(const Dag& dag) {
    Pdag g(dag.node_count());
    for (auto [u, v] : dag.edges()) g.add_undirected(u, v);
    return g;
}

std::vector<VStructure> v_structures(const Dag& dag) {
    std::vector<VStructure> out;
    for (NodeId b = 0; b < dag.node_count(); ++b) {
        const auto& pa = dag.parents(b);
        for (auto i = pa.begin(); i != pa.end(); ++i)
            for (auto j = std::next(i); j != pa.end(); ++j)
                if (!dag.adjacent(*i, *j)) out.push_back({*i, b, *j});
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<VStructure> find_v_structures(Pdag& g, const SepsetRegistry& sepsets, std::optional<NodeId> restrict_to,
                                          std::vector<std::string>* diagnostics) {
    std::vector<VStructure> candidates;
    auto collect_around = [&](NodeId b) {
        const NodeSet adj = g.adjacents(b);
        for (auto i = adj.begin(); i != adj.end(); ++i)
            for (auto j = std::next(i); j != adj.end(); ++j)
                if (!g.adjacent(*i, *j)) candidates.push_back({*i, b, *j});
    };
    if (restrict_to) {
        const NodeId x = *restrict_to;
        collect_around(x);
        // x as an endpoint: x - b - c
        for (NodeId b : g.adjacents(x))
            for (NodeId c : g.adjacents(b))
                if (c != x && !g.adjacent(x, c)) candidates.push_back({std::min(x, c), b, std::max(x, c)});
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    } else {
        for (NodeId b = 0; b < g.node_count(); ++b) collect_around(b);
    }

    std::vector<VStructure> oriented;
    for (const auto& t : candidates) {
        const bool a_in = g.is_directed(t.a, t.b);
        const bool c_in = g.is_directed(t.c, t.b);
        if (a_in && c_in) continue;
        const NodeSet* sep = sepsets.find(t.a, t.c);
        if (sep == nullptr) {
            if (diagnostics)
                diagnostics->push_back("no separator recorded for non-adjacent pair " + pair_str(t.a, t.c) +
                                       "; triple through " + std::to_string(t.b) + " left unoriented");
            continue;
        }
        if (sep->contains(t.b)) continue;
        // Collider: both ends must point into b.
        if (g.is_directed(t.b, t.a) || g.is_directed(t.b, t.c)) {
            if (diagnostics)
                diagnostics->push_back("v-structure " + std::to_string(t.a) + "->" + std::to_string(t.b) + "<-" +
                                       std::to_string(t.c) + " conflicts with existing orientation; skipped");
            continue;
        }
        if ((!a_in && g.would_create_cycle(t.a, t.b)) || (!c_in && g.would_create_cycle(t.c, t.b))) {
            if (diagnostics)
                diagnostics->push_back("v-structure " + std::to_string(t.a) + "->" + std::to_string(t.b) + "<-" +
                                       std::to_string(t.c) + " would create a cycle; skipped");
            continue;
        }
        if (!a_in) g.orient(t.a, t.b);
        if (!c_in && !g.is_directed(t.c, t.b)) {
            if (g.would_create_cycle(t.c, t.b)) continue;
            g.orient(t.c, t.b);
        }
        oriented.push_back(t);
    }
    return oriented;
}

// ---------------------------------------------------------------- Meek rules

namespace {

// R1: c -> a - b, c and b non-adjacent.
bool rule1(const Pdag& g, NodeId a, NodeId b) {
    for (NodeId c : g.parents(a))
        if (!g.adjacent(c, b)) return true;
    return false;
}

// R2: a -> c -> b with a - b.
bool rule2(const Pdag& g, NodeId a, NodeId b) {
    for (NodeId c : g.children(a))
        if (g.is_directed(c, b)) return true;
    return false;
}

// R3: a - c -> b and a - d -> b, c and d non-adjacent.
bool rule3(const Pdag& g, NodeId a, NodeId b) {
    std::vector<NodeId> mids;
    for (NodeId c : g.neighbors(a))
        if (g.is_directed(c, b)) mids.push_back(c);
    for (std::size_t i = 0; i < mids.size(); ++i)
        for (std::size_t j = i + 1; j < mids.size(); ++j)
            if (!g.adjacent(mids[i], mids[j])) return true;
    return false;
}

// R4: c -> d -> b with a adjacent to c and d, c and b non-adjacent.
bool rule4(const Pdag& g, NodeId a, NodeId b) {
    for (NodeId d : g.parents(b)) {
        if (d == a || !g.adjacent(a, d)) continue;
        for (NodeId c : g.parents(d))
            if (c != a && c != b && g.adjacent(a, c) && !g.adjacent(c, b)) return true;
    }
    return false;
}

}  // namespace

int apply_meek_rules(Pdag& g) {
    int oriented = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [u, v] : g.undirected_edges()) {
            for (auto [a, b] : {std::pair{u, v}, std::pair{v, u}}) {
                if (!g.is_undirected(a, b)) break;
                if (rule1(g, a, b) || rule2(g, a, b) || rule3(g, a, b) || rule4(g, a, b)) {
                    if (g.would_create_cycle(a, b)) continue;
                    g.orient(a, b);
                    ++oriented;
                    changed = true;
                    break;
                }
            }
        }
    }
    return oriented;
}

Pdag meek_closure(Pdag g) {
    apply_meek_rules(g);
    return g;
}

Pdag cpdag(const Dag& dag) {
    (void)dag.topological_order();  // rejects cyclic input
    Pdag g = skeleton(dag);
    for (const auto& v : v_structures(dag)) {
        if (g.is_undirected(v.a, v.b)) g.orient(v.a, v.b);
        if (g.is_undirected(v.c, v.b)) g.orient(v.c, v.b);
    }
    apply_meek_rules(g);
    return g;
}

Pdag cpdag(const Dag& dag, const TimeLayout& layout) {
    if (layout.node_count() != dag.node_count())
        throw ArgumentError("time layout does not match the DAG's node count");
    (void)dag.topological_order();
    Pdag g = skeleton(dag);
    for (auto [u, v] : dag.edges()) {
        if (layout.lag_of(u) == layout.lag_of(v)) continue;
        if (layout.lag_of(u) < layout.lag_of(v))
            throw ArgumentError("cross-time edge " + pair_str(u, v) + " points backwards in time");
        g.orient(u, v);
    }
    for (const auto& v : v_structures(dag)) {
        if (g.is_undirected(v.a, v.b)) g.orient(v.a, v.b);
        if (g.is_undirected(v.c, v.b)) g.orient(v.c, v.b);
    }
    apply_meek_rules(g);
    return g;
}

}  // namespace tsdag
