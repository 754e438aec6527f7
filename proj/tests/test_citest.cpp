#include <doctest.h>

#include <cmath>

#include "checks.hpp"
#include "tsdag/citest.hpp"
#include "tsdag/ci_tester.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/simgen.hpp"

using namespace tsdag;

namespace {

TimeSeriesDataset iid_data(int n, std::uint64_t seed) {
    DynamicSem sem;
    sem.variables = {"a", "b", "c"};
    sem.q = 1;
    sem.base = Dag(3);
    sem.noise_sd = {1.0, 1.0, 1.0};
    SimConfig cfg;
    cfg.lengths = {n};
    cfg.seed = seed;
    return generate_dataset(sem, cfg);
}

}  // namespace

TEST_CASE("G2 of the Gaussian CLRT") {
    // -N log(1 - r^2) with N = 100, r = 0.3.
    CHECK(clrt_statistic(0.3, 100) == doctest::Approx(9.4311).epsilon(1e-4));
    CHECK(clrt_statistic(0.0, 100) == 0.0);
}

TEST_CASE("chi-square(1) helpers") {
    CHECK(chi2_1_sf(3.841458820694124) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK(chi2_1_quantile(0.99) == doctest::Approx(6.634896601021214).epsilon(1e-9));
    CHECK(chi2_1_cdf(1.0) + chi2_1_sf(1.0) == doctest::Approx(1.0));
}

TEST_CASE("default bandwidth") {
    CHECK(default_bandwidth(100, 1) == 4);
    CHECK(default_bandwidth(500, 1) == static_cast<int>(std::floor(4 * std::pow(5.0, 2.0 / 9.0))));
    CHECK(default_bandwidth(10, 7) == 7);
}

TEST_CASE("partial correlation equals the residual-regression oracle") {
    CHECK(checks::partial_corr_oracle_gap(5, 500) <= 1e-10);
}

TEST_CASE("ci_test is invariant to affine changes of each variable") {
    CHECK(checks::affine_invariance_drift(9, 10) <= 1e-10);
}

TEST_CASE("hypothesis validation") {
    CHECK_THROWS_AS((CiHypothesis{1, 1, {}}.validate(3)), ArgumentError);
    CHECK_THROWS_AS((CiHypothesis{0, 1, {1}}.validate(3)), ArgumentError);
    CHECK_THROWS_AS((CiHypothesis{0, 1, {2, 2}}.validate(3)), ArgumentError);
    CHECK_THROWS_AS((CiHypothesis{0, 5, {}}.validate(3)), ArgumentError);
    const CiHypothesis h = CiHypothesis{2, 0, {1}}.normalized();
    CHECK(h.a == 0);
    CHECK(h.b == 2);
}

TEST_CASE("tests are symmetric in a and b") {
    const PiledMatrix pm = pile(iid_data(300, 4), 1);
    const SufficientStats st = sufficient_stats(pm);
    const CiTestConfig cfg;
    const CiTestResult r1 = ci_test(pm, st, {1, 4, {3}}, cfg), r2 = ci_test(pm, st, {4, 1, {3}}, cfg);
    CHECK(r1.g2 == r2.g2);
    CHECK(r1.lambda_hat == r2.lambda_hat);
}

TEST_CASE("lambda is near one for independent rows") {
    double sum = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const PiledMatrix pm = pile(iid_data(800, 100 + rep), 0);
        sum += estimate_lambda(pm, {0, 1, {2}}, CiTestConfig{});
    }
    CHECK(sum / 20 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("lambda floor and rescale switch") {
    const PiledMatrix pm = pile(iid_data(200, 8), 1);
    const SufficientStats st = sufficient_stats(pm);
    CiTestConfig cfg;
    cfg.lambda_floor = 5.0;
    const CiTestResult r = ci_test(pm, st, {3, 4, {}}, cfg);
    CHECK(r.lambda_hat == 5.0);
    CHECK(r.p_value == doctest::Approx(chi2_1_sf(r.g2 / 5.0)));
    cfg.rescale = false;
    CHECK(ci_test(pm, st, {3, 4, {}}, cfg).p_value == doctest::Approx(chi2_1_sf(r.g2)));
}

TEST_CASE("singular conditioning sets raise SingularityError") {
    TimeSeriesDataset ds = iid_data(100, 2);
    ds.replicates[0].col(2) = 2.0 * ds.replicates[0].col(1);
    const PiledMatrix pm = pile(ds, 0);
    const SufficientStats st = sufficient_stats(pm);
    CHECK_THROWS_AS(ci_test(pm, st, {0, 1, {2}}, CiTestConfig{}), SingularityError);
}

TEST_CASE("engine-backed tester matches the free function") {
    auto pm = std::make_shared<PiledMatrix>(pile(iid_data(300, 21), 1));
    auto engine = std::make_shared<GaussianCiEngine>(pm);
    GaussianCiTester tester(engine, CiTestConfig{});
    const SufficientStats st = sufficient_stats(*pm);
    const CiHypothesis h{0, 5, {1, 4}};
    const CiTestResult direct = ci_test(*pm, st, h, CiTestConfig{});
    const CiTestResult cached = tester.result(h);
    CHECK(cached.g2 == doctest::Approx(direct.g2).epsilon(1e-12));
    CHECK(cached.lambda_hat == doctest::Approx(direct.lambda_hat).epsilon(1e-10));
    tester.test(0, 5, std::vector<NodeId>{1, 4});
    const auto before = engine->evaluations();
    tester.test(5, 0, std::vector<NodeId>{4, 1});
    CHECK(engine->evaluations() == before);
}

TEST_CASE("tester and engine must agree on lambda options") {
    auto pm = std::make_shared<PiledMatrix>(pile(iid_data(100, 3), 1));
    auto engine = std::make_shared<GaussianCiEngine>(pm, true, std::nullopt, true);
    CiTestConfig cfg;
    cfg.prewhiten = false;
    CHECK_THROWS_AS(GaussianCiTester(engine, cfg), ArgumentError);
    cfg.prewhiten = true;
    cfg.bandwidth = engine->bandwidth() + 1;
    CHECK_THROWS_AS(GaussianCiTester(engine, cfg), ArgumentError);
}
