#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "checks.hpp"
#include "tsdag/alarm.hpp"
#include "tsdag/ci_tester.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/eval.hpp"
#include "tsdag/simgen.hpp"

using namespace tsdag;

namespace {

DynamicSem two_node(double within, double self_lag) {
    DynamicSem s;
    s.variables = {"x", "y"};
    s.q = 1;
    s.base = Dag(2);
    if (within != 0.0) {
        s.base.add_edge(0, 1);
        s.within.push_back({0, 1, within});
    }
    s.lags = {{0, 1, 0, self_lag}, {1, 1, 1, self_lag}};
    s.noise_sd = {1.0, 1.0};
    return s;
}

SimConfig one_series(int n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.lengths = {n};
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("derived seeds are deterministic and distinct") {
    CHECK(derive_seed(7, 3) == derive_seed(7, 3));
    CHECK(derive_seed(7, 3) != derive_seed(7, 4));
    CHECK(derive_seed(7, 3) != derive_seed(8, 3));
}

TEST_CASE("coefficient magnitudes are uniform with balanced signs") {
    Dag chain(2);
    chain.add_edge(0, 1);
    const DynamicSem skel = extend_to_dynamic(chain);
    const CoeffRange r = CoeffRange::weak();
    std::vector<double> mags;
    int positive = 0;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        const DynamicSem sem = sample_coefficients(skel, r, s);
        mags.push_back(std::abs(sem.within[0].coef));
        if (sem.within[0].coef > 0) ++positive;
        for (const LagEdge& e : sem.lags) CHECK_MESSAGE(e.coef > 0, "self-lag sign");
    }
    std::sort(mags.begin(), mags.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < mags.size(); ++i) {
        const double f = (mags[i] - r.lo) / (r.hi - r.lo);
        ks = std::max({ks, std::abs(f - static_cast<double>(i) / mags.size()),
                       std::abs(f - static_cast<double>(i + 1) / mags.size())});
    }
    CHECK(ks < 1.63 / std::sqrt(10000.0));
    CHECK(std::abs(positive / 10000.0 - 0.5) < 0.02);
    CHECK(mags.front() >= r.lo);
    CHECK(mags.back() <= r.hi);

    const DynamicSem fixed = sample_coefficients(skel, {0.5, 0.5}, 3);
    CHECK(std::abs(fixed.within[0].coef) == 0.5);
}

TEST_CASE("AR(1) moments") {
    const double b = 0.5;
    DynamicSem s = two_node(0.0, b);
    const TimeSeriesDataset ds = generate_dataset(s, one_series(100000, 11));
    const auto x = ds.replicates[0].col(0);
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    double acf = 0.0;
    for (Eigen::Index t = 1; t < x.size(); ++t) acf += (x(t) - mean) * (x(t - 1) - mean);
    acf /= (x.size() - 1) * var;
    CHECK(var == doctest::Approx(1.0 / (1.0 - b * b)).epsilon(0.03));
    CHECK(acf == doctest::Approx(b).epsilon(0.03));

    const PiledMatrix pm = pile(ds, 1);
    const SufficientStats st = sufficient_stats(pm);
    // Columns: x[t-1], y[t-1], x[t], y[t].
    CHECK(st.covariance(0, 2) == doctest::Approx(b / (1.0 - b * b)).epsilon(0.04));
    CHECK(std::abs(st.covariance(0, 3)) < 0.03);
}

TEST_CASE("zero coefficients give iid standard normal data") {
    const TimeSeriesDataset ds = generate_dataset(two_node(0.0, 0.0), one_series(100000, 5));
    const PiledMatrix pm = pile(ds, 1);
    const SufficientStats st = sufficient_stats(pm);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(std::abs(st.covariance(i, j) - (i == j ? 1.0 : 0.0)) < 0.02);
}

TEST_CASE("ALARM window and simulation shapes") {
    const DynamicSem skel = extend_to_dynamic(within_time_dag(alarm_graph()), 1, alarm_graph().variables);
    CHECK(skel.base.edge_count() == 46);
    CHECK(skel.lags.size() == 37);
    CHECK(skel.window_dag().edge_count() == 2 * 46 + 37);
    const Table3Preset& preset = table3_preset("alarm-n500-weak");
    SimConfig cfg;
    cfg.range = preset.range;
    cfg.lengths = {preset.n};
    cfg.seed = 2;
    const Simulation sim = simulate(skel, cfg);
    CHECK(spectral_radius(sim.sem) < 1.0);
    REQUIRE(sim.data.m() == 1);
    CHECK(sim.data.replicates[0].rows() == 500);
    CHECK(sim.data.replicates[0].cols() == 37);
    const PiledMatrix pm = pile(sim.data, 1);
    CHECK(pm.rows() == 499);
    CHECK(pm.data.cols() == 74);
}

TEST_CASE("replicates and lengths") {
    SimConfig cfg;
    cfg.m = 3;
    cfg.lengths = {4, 5, 6};
    cfg.seed = 1;
    const TimeSeriesDataset ds = generate_dataset(two_node(0.3, 0.4), cfg);
    REQUIRE(ds.m() == 3);
    CHECK(ds.replicates[2].rows() == 6);
    cfg.lengths = {4, 5};
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("non-stationary systems are rejected") {
    CHECK_THROWS_AS(generate_dataset(two_node(0.0, 1.2), one_series(50, 1)), ArgumentError);
    CHECK_THROWS_AS(CoeffRange({0.6, 0.2}).validate(), ArgumentError);
}

TEST_CASE("sem json round trip") {
    const DynamicSem s = sample_coefficients(extend_to_dynamic(within_time_dag(alarm_graph()), 1,
                                                               alarm_graph().variables),
                                             CoeffRange::strong(), 9);
    const DynamicSem back = sem_from_json(sem_to_json(s));
    CHECK(back.variables == s.variables);
    CHECK(back.within_matrix() == s.within_matrix());
    CHECK(back.lag_matrix(1) == s.lag_matrix(1));
    CHECK(back.noise_sd == s.noise_sd);
}

TEST_CASE("the test detects a within-time effect of 0.5 at N = 499") {
    int rejections = 0;
    const int reps = 50;
    for (int r = 0; r < reps; ++r) {
        const TimeSeriesDataset ds = generate_dataset(two_node(0.5, 0.3), one_series(500, derive_seed(4, r)));
        auto pm = std::make_shared<const PiledMatrix>(pile(ds, 1));
        GaussianCiTester t(std::make_shared<GaussianCiEngine>(pm), CiTestConfig{});
        if (!t.test(2, 3, {}).independent) ++rejections;
    }
    CHECK(rejections > 0.9 * reps);
}

TEST_CASE("AR(1) variance helper") {
    const checks::Ar1Moments m = checks::ar1_moments(0.5, 200, 400, 3);
    CHECK(m.within(4.0));
}
