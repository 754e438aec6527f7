#include "tsdag/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "tsdag/errors.hpp"

namespace tsdag {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void DynamicSem::validate() const {
    const int n = p();
    if (n == 0) throw ArgumentError("dynamic SEM has no variables");
    if (q < 0) throw ArgumentError("lag order must be non-negative");
    if (!variables.empty() && static_cast<int>(variables.size()) != n)
        throw ArgumentError("variable names do not match the node count");
    if (static_cast<int>(noise_sd.size()) != n) throw ArgumentError("noise_sd needs one entry per variable");
    for (double s : noise_sd)
        if (!(s > 0.0) || !std::isfinite(s)) throw ArgumentError("noise standard deviations must be positive");
    if (within.size() != base.edge_count()) throw ArgumentError("within coefficients do not match the base DAG");
    std::set<std::pair<int, int>> seen;
    for (const auto& e : within) {
        if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n || !base.has_edge(e.from, e.to))
            throw ArgumentError("within edge missing from the base DAG");
        if (!seen.insert({e.from, e.to}).second) throw ArgumentError("duplicate within edge");
        if (!std::isfinite(e.coef)) throw ArgumentError("non-finite coefficient");
    }
    std::set<std::tuple<int, int, int>> lseen;
    for (const auto& e : lags) {
        if (e.from_var < 0 || e.from_var >= n || e.to_var < 0 || e.to_var >= n)
            throw ArgumentError("lag edge names an unknown variable");
        if (e.lag < 1 || e.lag > q) throw ArgumentError("lag edge outside 1..q");
        if (!lseen.insert({e.from_var, e.lag, e.to_var}).second) throw ArgumentError("duplicate lag edge");
        if (!std::isfinite(e.coef)) throw ArgumentError("non-finite coefficient");
    }
}

Dag DynamicSem::window_dag() const {
    const TimeLayout lay = layout();
    Dag g(lay.node_count());
    for (int block = 0; block <= q; ++block)
        for (const auto& e : within) g.add_edge(lay.node(e.from, block), lay.node(e.to, block));
    for (const auto& e : lags)
        for (int to_lag = 0; to_lag + e.lag <= q; ++to_lag)
            g.add_edge(lay.node(e.from_var, to_lag + e.lag), lay.node(e.to_var, to_lag));
    return g;
}

Eigen::MatrixXd DynamicSem::within_matrix() const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p(), p());
    for (const auto& e : within) b(e.to, e.from) = e.coef;
    return b;
}

Eigen::MatrixXd DynamicSem::lag_matrix(int lag) const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p(), p());
    for (const auto& e : lags)
        if (e.lag == lag) b(e.to_var, e.from_var) = e.coef;
    return b;
}

void CoeffRange::validate() const {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
        throw ArgumentError("coefficient range must satisfy 0 < lo <= hi");
}

int SimConfig::length(int replicate) const { return lengths.size() == 1 ? lengths[0] : lengths.at(replicate); }

void SimConfig::validate() const {
    range.validate();
    if (m < 1) throw ArgumentError("need at least one replicate");
    if (lengths.size() != 1 && static_cast<int>(lengths.size()) != m)
        throw ArgumentError("lengths must hold one value or one per replicate");
    for (int n : lengths)
        if (n < 1) throw ArgumentError("replicate length must be positive");
    if (burn_in < 0) throw ArgumentError("burn-in must be non-negative");
}

DynamicSem extend_to_dynamic(const Dag& dag, int q, std::vector<std::string> variables) {
    if (q != 1) throw ArgumentError("extend_to_dynamic supports q = 1 only");
    DynamicSem sem;
    sem.q = 1;
    sem.base = dag;
    if (variables.empty())
        for (int i = 0; i < dag.node_count(); ++i) variables.push_back("X" + std::to_string(i + 1));
    sem.variables = std::move(variables);
    for (const auto& [a, b] : dag.edges()) sem.within.push_back({a, b, 0.0});
    for (int g = 0; g < dag.node_count(); ++g) sem.lags.push_back({g, 1, g, 0.0});
    sem.noise_sd.assign(dag.node_count(), 1.0);
    sem.validate();
    return sem;
}

DynamicSem sem_from_graph_file(const GraphFile& g) {
    if (g.p == 0) throw ArgumentError("graph file has no variables");
    if (g.q == 0) return extend_to_dynamic(within_time_dag(g), 1, g.variables);
    DynamicSem sem;
    sem.q = g.q;
    sem.variables = g.variables;
    sem.base = Dag(g.p);
    std::set<std::pair<int, int>> within;
    std::set<std::tuple<int, int, int>> lagged;
    for (const auto& e : g.edges) {
        if (e.undirected) throw ArgumentError("simulation needs a fully directed graph");
        const int a = g.variable_index(e.from_var), b = g.variable_index(e.to_var);
        if (e.from_lag == e.to_lag)
            within.insert({a, b});
        else if (e.to_lag == 0)
            lagged.insert({a, e.from_lag, b});
        else
            lagged.insert({a, e.from_lag - e.to_lag, b});
    }
    for (const auto& [a, b] : within) {
        sem.base.add_edge(a, b);
        sem.within.push_back({a, b, 0.0});
    }
    for (const auto& [a, l, b] : lagged) sem.lags.push_back({a, l, b, 0.0});
    sem.noise_sd.assign(g.p, 1.0);
    sem.validate();
    return sem;
}

DynamicSem sample_coefficients(DynamicSem sem, const CoeffRange& range, std::uint64_t seed, bool positive_self_lags) {
    range.validate();
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> mag(range.lo, range.hi);
    std::bernoulli_distribution sign(0.5);
    auto draw = [&](bool force_positive) {
        const double v = range.lo == range.hi ? range.lo : mag(rng);
        const bool neg = sign(rng);
        return force_positive || !neg ? v : -v;
    };
    for (auto& e : sem.within) e.coef = draw(false);
    for (auto& e : sem.lags) e.coef = draw(positive_self_lags && e.from_var == e.to_var);
    return sem;
}

Eigen::MatrixXd transition_matrix(const DynamicSem& sem) {
    const int p = sem.p(), q = std::max(sem.q, 1);
    const Eigen::MatrixXd inv = (Eigen::MatrixXd::Identity(p, p) - sem.within_matrix()).inverse();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(p * q, p * q);
    for (int l = 1; l <= q; ++l) c.block(0, (l - 1) * p, p, p) = inv * sem.lag_matrix(l);
    if (q > 1) c.block(p, 0, p * (q - 1), p * (q - 1)).setIdentity();
    return c;
}

double spectral_radius(const DynamicSem& sem) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(transition_matrix(sem), false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

TimeSeriesDataset generate_dataset(const DynamicSem& sem, const SimConfig& cfg) {
    sem.validate();
    cfg.validate();
    const double rho = spectral_radius(sem);
    if (!(rho < 1.0)) throw ArgumentError("dynamic SEM is not stationary (spectral radius " + std::to_string(rho) + ")");

    const int p = sem.p(), q = sem.q;
    const auto order = sem.base.topological_order();
    std::vector<std::vector<std::pair<int, double>>> within_in(p);
    for (const auto& e : sem.within) within_in[e.to].push_back({e.from, e.coef});
    std::vector<std::vector<LagEdge>> lag_in(p);
    for (const auto& e : sem.lags) lag_in[e.to_var].push_back(e);

    TimeSeriesDataset ds;
    ds.variables = sem.variables;
    if (ds.variables.empty())
        for (int i = 0; i < p; ++i) ds.variables.push_back("X" + std::to_string(i + 1));
    for (int j = 0; j < cfg.m; ++j) {
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(j)));
        std::normal_distribution<double> z(0.0, 1.0);
        const int n = cfg.length(j), total = n + cfg.burn_in;
        // Rows 0..q-1 are the zero start; row q + t is time t of the run.
        Eigen::MatrixXd x = Eigen::MatrixXd::Zero(total + q, p);
        for (int t = q; t < total + q; ++t)
            for (int v : order) {
                double s = sem.noise_sd[v] * z(rng);
                for (const auto& e : lag_in[v]) s += e.coef * x(t - e.lag, e.from_var);
                for (const auto& [u, b] : within_in[v]) s += b * x(t, u);
                x(t, v) = s;
            }
        ds.replicates.push_back(x.bottomRows(n));
        ds.replicate_ids.push_back(std::to_string(j + 1));
    }
    ds.validate();
    return ds;
}

Simulation simulate(const DynamicSem& skeleton, const SimConfig& cfg) {
    Simulation s;
    s.sem = sample_coefficients(skeleton, cfg.range, derive_seed(cfg.seed, 0xC0EFULL), cfg.positive_self_lags);
    SimConfig data_cfg = cfg;
    data_cfg.seed = derive_seed(cfg.seed, 0xDA7AULL);
    s.data = generate_dataset(s.sem, data_cfg);
    return s;
}

nlohmann::json sem_to_json(const DynamicSem& sem) {
    using nlohmann::json;
    json j;
    j["p"] = sem.p();
    j["q"] = sem.q;
    j["variables"] = sem.variables;
    json w = json::array();
    for (const auto& e : sem.within) w.push_back({{"from", e.from}, {"to", e.to}, {"coef", e.coef}});
    j["within"] = std::move(w);
    json l = json::array();
    for (const auto& e : sem.lags)
        l.push_back({{"from", e.from_var}, {"lag", e.lag}, {"to", e.to_var}, {"coef", e.coef}});
    j["lags"] = std::move(l);
    j["noise_sd"] = sem.noise_sd;
    return j;
}

DynamicSem sem_from_json(const nlohmann::json& j) {
    try {
        DynamicSem sem;
        const int p = j.at("p").get<int>();
        if (p < 1) throw ArgumentError("SEM must have at least one variable");
        sem.q = j.at("q").get<int>();
        sem.variables = j.value("variables", std::vector<std::string>{});
        sem.base = Dag(p);
        for (const auto& e : j.at("within")) {
            WithinEdge w{e.at("from").get<int>(), e.at("to").get<int>(), e.at("coef").get<double>()};
            if (w.from < 0 || w.from >= p || w.to < 0 || w.to >= p) throw ArgumentError("within edge out of range");
            sem.base.add_edge(w.from, w.to);
            sem.within.push_back(w);
        }
        for (const auto& e : j.at("lags"))
            sem.lags.push_back({e.at("from").get<int>(), e.at("lag").get<int>(), e.at("to").get<int>(),
                                e.at("coef").get<double>()});
        sem.noise_sd = j.at("noise_sd").get<std::vector<double>>();
        sem.validate();
        return sem;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed SEM JSON: ") + e.what());
    }
}

}  // namespace tsdag
