#include <doctest.h>

#include <sstream>

#include "tsdag/errors.hpp"
#include "tsdag/eval.hpp"

using namespace tsdag;

TEST_CASE("precision and recall on hand-built sets") {
    const PrReport r = precision_recall({1, 2}, {5}, {1, 2, 5}, {1, 3}, {5, 6});
    CHECK(*r.pa.precision == doctest::Approx(0.5));
    CHECK(*r.pa.recall == doctest::Approx(0.5));
    CHECK(*r.ch.precision == doctest::Approx(1.0));
    CHECK(*r.ch.recall == doctest::Approx(0.5));
    CHECK(*r.pc.precision == doctest::Approx(2.0 / 3.0));
    CHECK(*r.pc.recall == doctest::Approx(0.5));

    const PrReport empty = precision_recall({}, {}, {}, {1}, {});
    CHECK_FALSE(empty.pa.precision.has_value());
    CHECK(*empty.pa.recall == 0.0);
    CHECK_FALSE(empty.ch.recall.has_value());
}

TEST_CASE("aggregate skips absent values") {
    const std::vector<PrReport> runs{precision_recall({1}, {}, {1}, {1}, {}), precision_recall({}, {}, {}, {1}, {})};
    const PrReport a = aggregate(runs);
    CHECK(a.replications == 2);
    CHECK(*a.pa.precision == doctest::Approx(1.0));
    CHECK(a.pa.precision_runs == 1);
    CHECK(*a.pa.recall == doctest::Approx(0.5));
    CHECK(a.pa.recall_runs == 2);
}

TEST_CASE("presets and names") {
    CHECK(table3_presets().size() == 4);
    CHECK(table3_preset("alarm-n10m50-weak").m == 50);
    CHECK(table3_preset("alarm-n500-strong").range.lo == 0.4);
    CHECK_THROWS_AS(table3_preset("nope"), ArgumentError);
    CHECK(parse_method("tspcd") == Method::tspcd);
    CHECK_THROWS_AS(parse_method("x"), ArgumentError);
    CHECK(parse_null("h0dprime") == NullKind::h0dprime);
    CHECK_THROWS_AS(parse_null("x"), ArgumentError);
    Table3Options o;
    o.reps = 0;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
}

TEST_CASE("oracle benchmark recovers the PC set exactly") {
    Table3Options o;
    o.reps = 2;
    o.oracle = true;
    o.max_sepset_size = 5;
    const PrReport r = run_table3(table3_preset("alarm-n500-weak"), Method::tspcd, true, o);
    CHECK(*r.pc.precision == doctest::Approx(1.0));
    CHECK(*r.pc.recall == doctest::Approx(1.0));
    CHECK(*r.pa.precision == doctest::Approx(1.0));
    CHECK(*r.ch.precision == doctest::Approx(1.0));
}

TEST_CASE("grid output is deterministic across thread counts") {
    Table3Options o;
    o.reps = 3;
    const std::vector<Method> methods{Method::tspcd, Method::pcd};
    const auto one = run_table3_grid(table3_preset("alarm-n10m50-weak"), methods, {true, false}, o);
    o.jobs = 3;
    const auto three = run_table3_grid(table3_preset("alarm-n10m50-weak"), methods, {true, false}, o);
    std::ostringstream a, b;
    write_table3_csv(a, one);
    write_table3_csv(b, three);
    CHECK(a.str() == b.str());
    CHECK(one.size() == 4);
    CHECK(a.str().find("preset,statistic,method,reps,pa_precision") != std::string::npos);
}

TEST_CASE("calibration under iid and H0' nulls") {
    CalibrationOptions o;
    o.reps = 300;
    o.n = 300;
    const CalibrationReport iid = run_calibration(NullKind::iid, o);
    CHECK(iid.mean_lambda == doctest::Approx(1.0).epsilon(0.15));
    CHECK(iid.rescaled.ks_distance < 0.1);
    CHECK(iid.rescaled.sorted_stats.size() == 300);
    CHECK(std::is_sorted(iid.rescaled.sorted_stats.begin(), iid.rescaled.sorted_stats.end()));

    o.reps = 150;
    const CalibrationReport h = run_calibration(NullKind::h0prime, o);
    CHECK(h.mean_lambda > 1.3);
    // Rescaling pulls the statistic back toward chi-square(1).
    CHECK(h.rescaled.ks_distance < h.unrescaled.ks_distance);
    CHECK(h.rescaled.rejection_rate <= h.unrescaled.rejection_rate);

    std::ostringstream csv;
    const std::vector<CalibrationReport> reports{iid, h};
    write_calibration_csv(csv, reports);
    CHECK(csv.str().rfind("null,statistic,sample_size", 0) == 0);
}

TEST_CASE("ks distance of an exact quantile grid is small") {
    CalibrationOptions o;
    std::vector<double> one{0.4549364231195728};  // chi-square(1) median
    CHECK(ks_distance_chi2_1(one) == doctest::Approx(0.5));
    o.reps = 0;
    CHECK_THROWS_AS(o.validate(), ArgumentError);
}
