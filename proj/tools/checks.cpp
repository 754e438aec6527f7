#include "checks.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>

#include "tsdag/citest.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/graph_io.hpp"
#include "tsdag/simgen.hpp"

namespace tsdag::checks {

namespace {

NodeSet true_adjacents(const Dag& g, NodeId n) {
    NodeSet out = g.parents(n);
    out.insert(g.children(n).begin(), g.children(n).end());
    return out;
}

std::string set_text(const NodeSet& s) {
    std::ostringstream os;
    os << "{";
    bool first = true;
    for (NodeId n : s) {
        os << (first ? "" : ",") << n;
        first = false;
    }
    os << "}";
    return os.str();
}

// Every decided edge of g is directed the same way in the reference CPDAG.
bool sound_orientations(const Pdag& reference, const Pdag& g, std::string& detail) {
    for (auto [a, b] : g.directed_edges())
        if (!reference.is_directed(a, b)) {
            detail += " wrong orientation " + std::to_string(a) + "->" + std::to_string(b) + ";";
            return false;
        }
    return true;
}

// Unshielded colliders a -> b <- c of a mixed graph, both arrows directed.
std::vector<VStructure> colliders(const Pdag& g) {
    std::vector<VStructure> out;
    for (NodeId b = 0; b < g.node_count(); ++b) {
        const NodeSet& pa = g.parents(b);
        for (auto i = pa.begin(); i != pa.end(); ++i)
            for (auto j = std::next(i); j != pa.end(); ++j)
                if (!g.adjacent(*i, *j)) out.push_back({*i, b, *j});
    }
    return out;
}

bool acyclic(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> out(n);
    for (auto [u, v] : edges) {
        out[u].push_back(v);
        ++indeg[v];
    }
    std::vector<int> ready;
    for (int i = 0; i < n; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    int seen = 0;
    while (!ready.empty()) {
        int u = ready.back();
        ready.pop_back();
        ++seen;
        for (int v : out[u])
            if (--indeg[v] == 0) ready.push_back(v);
    }
    return seen == n;
}

Eigen::MatrixXd random_spd(int d, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = z(rng);
    return a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

}  // namespace

OracleTargetCheck check_oracle_target(const Dag& window, const Pdag& reference, const LocalStructure& ls) {
    OracleTargetCheck c;
    const NodeId t = ls.target;
    const NodeSet truth = true_adjacents(window, t);
    const NodeSet learned = ls.pc();
    c.pc_exact = learned == truth;
    if (!c.pc_exact) c.detail += " pc " + set_text(learned) + " vs " + set_text(truth) + ";";
    c.lagged_parents = true;
    for (NodeId u : window.parents(t))
        if (!ls.layout.is_current(u) && !ls.graph.is_directed(u, t)) {
            c.lagged_parents = false;
            c.detail += " lagged parent " + std::to_string(u) + " missing;";
        }
    c.orientations_sound = sound_orientations(reference, ls.graph, c.detail);
    return c;
}

NodeSet nodes_within_depth(const Dag& window, const TimeLayout& layout, NodeId target, int depth) {
    NodeSet out{target};
    std::deque<std::pair<NodeId, int>> q{{target, 0}};
    while (!q.empty()) {
        auto [u, dist] = q.front();
        q.pop_front();
        if (dist + 1 >= depth) continue;
        for (NodeId v : true_adjacents(window, u))
            if (layout.is_current(v) && out.insert(v).second) q.push_back({v, dist + 1});
    }
    return out;
}

DepthCheck check_within_depth(const Dag& window, const Pdag& reference, const LocalStructure& ls) {
    DepthCheck c;
    c.skeleton_exact = true;
    for (NodeId u : nodes_within_depth(window, ls.layout, ls.target, ls.depth)) {
        const NodeSet learned = ls.graph.adjacents(u);
        const NodeSet truth = true_adjacents(window, u);
        if (learned != truth) {
            c.skeleton_exact = false;
            c.detail += " adj(" + std::to_string(u) + ") " + set_text(learned) + " vs " + set_text(truth) + ";";
        }
    }
    c.no_false_edges = true;
    for (NodeId u = 0; u < ls.graph.node_count(); ++u)
        for (NodeId v : ls.graph.adjacents(u))
            if (u < v && !window.adjacent(u, v)) {
                c.no_false_edges = false;
                c.detail += " false edge " + std::to_string(u) + "-" + std::to_string(v) + ";";
            }
    c.orientations_sound = sound_orientations(reference, ls.graph, c.detail);
    c.no_false_v_structures = true;
    for (const VStructure& v : colliders(ls.graph)) {
        if (!ls.sepsets.contains(v.a, v.c)) continue;
        const bool real = window.has_edge(v.a, v.b) && window.has_edge(v.c, v.b) && !window.adjacent(v.a, v.c);
        if (!real) {
            c.no_false_v_structures = false;
            c.detail += " false v-structure " + std::to_string(v.a) + "->" + std::to_string(v.b) + "<-" +
                        std::to_string(v.c) + ";";
        }
    }
    return c;
}

std::vector<Dag> all_dags(int n) {
    if (n < 0 || n > 6) throw ArgumentError("all_dags supports 0..6 nodes");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
    std::size_t total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
    std::vector<Dag> out;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t code = 0; code < total; ++code) {
        edges.clear();
        std::size_t c = code;
        for (auto [i, j] : pairs) {
            const int state = static_cast<int>(c % 3);
            c /= 3;
            if (state == 1) edges.push_back({i, j});
            if (state == 2) edges.push_back({j, i});
        }
        if (acyclic(n, edges)) out.emplace_back(n, std::span<const std::pair<NodeId, NodeId>>(edges));
    }
    return out;
}

std::vector<Pdag> all_pdags(int n) {
    if (n < 0 || n > 4) throw ArgumentError("all_pdags supports 0..4 nodes");
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
    std::size_t total = std::size_t{1} << (2 * pairs.size());
    std::vector<Pdag> out;
    std::vector<std::pair<int, int>> directed;
    for (std::size_t code = 0; code < total; ++code) {
        directed.clear();
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const int state = static_cast<int>(code >> (2 * k) & 3);
            if (state == 1) directed.push_back(pairs[k]);
            if (state == 2) directed.push_back({pairs[k].second, pairs[k].first});
        }
        if (!acyclic(n, directed)) continue;
        Pdag g(n);
        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const int state = static_cast<int>(code >> (2 * k) & 3);
            if (state == 1) g.add_directed(pairs[k].first, pairs[k].second);
            if (state == 2) g.add_directed(pairs[k].second, pairs[k].first);
            if (state == 3) g.add_undirected(pairs[k].first, pairs[k].second);
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::optional<Pdag> extension_vote(const Pdag& g) {
    const int n = g.node_count();
    const auto fixed = g.directed_edges();
    const auto loose = g.undirected_edges();
    auto target = colliders(g);
    std::sort(target.begin(), target.end());
    // votes[k]: 1 = first->second seen, 2 = second->first seen
    std::vector<int> votes(loose.size(), 0);
    bool any = false;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t code = 0; code < (std::size_t{1} << loose.size()); ++code) {
        edges.assign(fixed.begin(), fixed.end());
        for (std::size_t k = 0; k < loose.size(); ++k) {
            auto [a, b] = loose[k];
            edges.push_back(code >> k & 1 ? std::pair<int, int>{b, a} : std::pair<int, int>{a, b});
        }
        if (!acyclic(n, edges)) continue;
        Dag d(n, std::span<const std::pair<NodeId, NodeId>>(edges));
        auto vs = v_structures(d);
        std::sort(vs.begin(), vs.end());
        auto want = target;
        for (auto& v : want)
            if (v.a > v.c) std::swap(v.a, v.c);
        std::sort(want.begin(), want.end());
        if (vs != want) continue;
        any = true;
        for (std::size_t k = 0; k < loose.size(); ++k) votes[k] |= (code >> k & 1) ? 2 : 1;
    }
    if (!any) return std::nullopt;
    Pdag out(n);
    for (auto [a, b] : fixed) out.add_directed(a, b);
    for (std::size_t k = 0; k < loose.size(); ++k) {
        auto [a, b] = loose[k];
        if (votes[k] == 1) out.add_directed(a, b);
        else if (votes[k] == 2) out.add_directed(b, a);
        else out.add_undirected(a, b);
    }
    return out;
}

MeekSweep meek_vote_sweep(int n) {
    MeekSweep s;
    for (const Pdag& g : all_pdags(n)) {
        auto voted = extension_vote(g);
        if (!voted) continue;
        ++s.checked;
        if (meek_closure(g) != *voted) ++s.mismatches;
    }
    return s;
}

double affine_invariance_drift(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> mag(0.1, 10.0), shift(-50.0, 50.0);
    std::bernoulli_distribution flip(0.5);
    double drift = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int p = 4;
        Dag base(p);
        base.add_edge(0, 1);
        base.add_edge(1, 2);
        base.add_edge(0, 3);
        SimConfig cfg;
        cfg.m = 3;
        cfg.lengths = {120};
        cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        TimeSeriesDataset ds = simulate(extend_to_dynamic(base), cfg).data;
        TimeSeriesDataset moved = ds;
        for (int g = 0; g < p; ++g) {
            const double a = mag(rng) * (flip(rng) ? -1.0 : 1.0);
            const double c = shift(rng);
            for (auto& r : moved.replicates) r.col(g) = (a * r.col(g)).array() + c;
        }
        const PiledMatrix pm0 = pile(ds, 1), pm1 = pile(moved, 1);
        const SufficientStats s0 = sufficient_stats(pm0), s1 = sufficient_stats(pm1);
        CiTestConfig ci;
        const std::vector<CiHypothesis> hs{{7, 5, {}}, {6, 4, {5}}, {7, 6, {4, 5}}, {4, 3, {0, 1}}, {2, 1, {5, 6, 0}}};
        for (const auto& h : hs) {
            const CiTestResult r0 = ci_test(pm0, s0, h, ci), r1 = ci_test(pm1, s1, h, ci);
            drift = std::max(drift, std::abs(r0.g2 - r1.g2) / std::max(1.0, std::abs(r0.g2)));
            drift = std::max(drift, std::abs(r0.p_value - r1.p_value));
            drift = std::max(drift, std::abs(r0.lambda_hat - r1.lambda_hat));
            drift = std::max(drift, std::abs(std::abs(r0.partial_corr) - std::abs(r1.partial_corr)));
        }
    }
    return drift;
}

int piling_count_failures(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(splitmix64(seed));
    int failures = 0;
    for (int t = 0; t < trials; ++t) {
        const int p = std::uniform_int_distribution<int>(1, 5)(rng);
        const int q = std::uniform_int_distribution<int>(0, 3)(rng);
        const int m = std::uniform_int_distribution<int>(1, 8)(rng);
        const bool allow_short = t % 2 == 1;
        TimeSeriesDataset ds;
        for (int g = 0; g < p; ++g) ds.variables.push_back("v" + std::to_string(g));
        long expected = 0;
        long total = 0;
        bool dropped = false;
        for (int j = 0; j < m; ++j) {
            const int lo = allow_short ? 1 : q + 1;
            const int n = std::uniform_int_distribution<int>(lo, 40)(rng);
            ds.replicates.push_back(Eigen::MatrixXd::Random(n, p));
            ds.replicate_ids.push_back("r" + std::to_string(j));
            total += n;
            if (n >= q + 1) expected += n - q;
            else dropped = true;
        }
        if (!dropped && expected != total - static_cast<long>(q) * m) ++failures;
        if (expected == 0) continue;  // nothing left to pile
        const PiledMatrix pm = pile(ds, q);
        if (pm.rows() != expected || pm.data.cols() != p * (q + 1)) ++failures;
    }
    return failures;
}

double partial_corr_oracle_gap(std::uint64_t seed, int trials) {
    std::mt19937_64 rng(splitmix64(seed));
    double gap = 0.0;
    for (int t = 0; t < trials; ++t) {
        const int d = std::uniform_int_distribution<int>(3, 8)(rng);
        SufficientStats st;
        st.covariance = random_spd(d, rng);
        st.means = Eigen::VectorXd::Zero(d);
        st.n = 100;
        std::vector<int> idx(d);
        for (int i = 0; i < d; ++i) idx[i] = i;
        std::shuffle(idx.begin(), idx.end(), rng);
        const int k = std::uniform_int_distribution<int>(0, d - 2)(rng);
        CiHypothesis h{idx[0], idx[1], std::vector<NodeId>(idx.begin() + 2, idx.begin() + 2 + k)};
        const Eigen::MatrixXd& c = st.covariance;
        // Residual covariance of (a, b) after regressing both on s.
        Eigen::Matrix2d r;
        r << c(h.a, h.a), c(h.a, h.b), c(h.b, h.a), c(h.b, h.b);
        if (k > 0) {
            Eigen::MatrixXd css(k, k), cas(2, k);
            for (int i = 0; i < k; ++i) {
                cas(0, i) = c(h.a, h.s[i]);
                cas(1, i) = c(h.b, h.s[i]);
                for (int j = 0; j < k; ++j) css(i, j) = c(h.s[i], h.s[j]);
            }
            r -= cas * css.ldlt().solve(cas.transpose());
        }
        const double oracle = r(0, 1) / std::sqrt(r(0, 0) * r(1, 1));
        gap = std::max(gap, std::abs(partial_correlation(st, h) - oracle));
    }
    return gap;
}

Ar1Moments ar1_moments(double b, int reps, int n, std::uint64_t seed) {
    DynamicSem sem;
    sem.variables = {"x"};
    sem.q = 1;
    sem.base = Dag(1);
    sem.lags = {{0, 1, 0, b}};
    sem.noise_sd = {1.0};
    SimConfig cfg;
    cfg.m = reps;
    cfg.lengths = {n};
    cfg.seed = seed;
    const TimeSeriesDataset ds = generate_dataset(sem, cfg);
    Ar1Moments out;
    out.coefficient = b;
    out.expected = 1.0 / (1.0 - b * b);
    std::vector<double> v;
    for (const auto& r : ds.replicates) v.push_back(r.col(0).squaredNorm() / r.rows());  // known zero mean
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out.mean_variance = mean;
    out.standard_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return out;
}

std::vector<std::string> tcell_gene_names() {
    std::vector<std::string> names{"JUND", "JUNB", "FYB"};
    for (int i = static_cast<int>(names.size()) + 1; names.size() < 58; ++i) {
        std::string s = std::to_string(i);
        names.push_back("GENE" + std::string(2 - std::min<std::size_t>(2, s.size()), '0') + s);
    }
    return names;
}

TimeSeriesDataset tcell_like_dataset(std::uint64_t seed) {
    const std::vector<std::string> names = tcell_gene_names();
    const int p = static_cast<int>(names.size());
    std::mt19937_64 rng(splitmix64(derive_seed(seed, 0x7CE11)));
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Dag base(p);
    std::uniform_int_distribution<int> fan(1, 2);
    for (int k = 1; k < p; ++k) {
        const int parents = std::min(k, fan(rng));
        for (int e = 0; e < parents; ++e) {
            const int from = order[std::uniform_int_distribution<int>(0, k - 1)(rng)];
            if (!base.has_edge(from, order[k])) base.add_edge(from, order[k]);
        }
    }
    SimConfig cfg;
    cfg.m = 44;
    cfg.lengths = {10};
    cfg.range = CoeffRange::strong();
    const DynamicSem skeleton = extend_to_dynamic(base, 1, names);
    // Redraw coefficients until the sampled system is stationary.
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        cfg.seed = derive_seed(seed, attempt);
        try {
            return simulate(skeleton, cfg).data;
        } catch (const ArgumentError&) {
        }
    }
    throw NumericalError("no stationary coefficient draw found");
}

}  // namespace tsdag::checks
