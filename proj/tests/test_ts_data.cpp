#include <doctest.h>

#include <sstream>

#include "checks.hpp"
#include "tsdag/errors.hpp"
#include "tsdag/ts_data.hpp"

using namespace tsdag;

namespace {

TimeSeriesDataset small_dataset() {
    TimeSeriesDataset ds;
    ds.variables = {"x", "y"};
    Eigen::MatrixXd a(3, 2), b(4, 2);
    a << 1, 2, 3, 4, 5, 6;
    b << 7, 8, 9, 10, 11, 12, 13, 14;
    ds.replicates = {a, b};
    ds.replicate_ids = {"r1", "r2"};
    return ds;
}

}  // namespace

TEST_CASE("csv round trip") {
    const TimeSeriesDataset ds = small_dataset();
    std::stringstream s;
    write_csv(ds, s);
    const TimeSeriesDataset back = read_csv(s);
    CHECK(back.variables == ds.variables);
    REQUIRE(back.m() == 2);
    CHECK(back.replicates[0] == ds.replicates[0]);
    CHECK(back.replicates[1] == ds.replicates[1]);
    CHECK(back.replicate_ids == ds.replicate_ids);
}

TEST_CASE("json round trip") {
    const TimeSeriesDataset ds = small_dataset();
    const TimeSeriesDataset back = dataset_from_json(dataset_to_json(ds));
    CHECK(back.replicates[1] == ds.replicates[1]);
    CHECK(back.variables == ds.variables);
}

TEST_CASE("csv parse errors") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_csv(in);
    };
    CHECK_THROWS_AS(parse(""), ParseError);
    CHECK_THROWS_AS(parse("a,b,x\n"), ParseError);
    CHECK_THROWS_AS(parse("replicate,time,x\nr,0,1\nr,1\n"), ParseError);
    CHECK_THROWS_AS(parse("replicate,time,x\nr,0,abc\n"), ParseError);
    CHECK_THROWS_AS(parse("replicate,time,x\nr,1,1\nr,0,2\n"), ParseError);
    CHECK_THROWS_AS(parse("replicate,time,x\nr,0,1\ns,0,1\nr,1,1\n"), ParseError);
    CHECK_THROWS_AS(parse("replicate,time,x\n,0,1\n"), ParseError);
    CHECK_NOTHROW(parse("replicate,time,x\nr,0,1\nr,1,2\n"));
}

TEST_CASE("validate rejects inconsistent shapes") {
    TimeSeriesDataset ds = small_dataset();
    ds.replicates[1] = Eigen::MatrixXd::Zero(3, 3);
    CHECK_THROWS_AS(ds.validate(), ArgumentError);
    ds = small_dataset();
    ds.variables = {"x", "x"};
    CHECK_THROWS_AS(ds.validate(), ArgumentError);
}

TEST_CASE("piling lays out lag windows") {
    const TimeSeriesDataset ds = small_dataset();
    const PiledMatrix pm = pile(ds, 1);
    CHECK(pm.rows() == (3 - 1) + (4 - 1));
    CHECK(pm.data.cols() == 4);
    // First row of replicate 1: (x_{t-1}, y_{t-1}, x_t, y_t) at t = 1.
    CHECK(pm.data(0, 0) == 1);
    CHECK(pm.data(0, 1) == 2);
    CHECK(pm.data(0, 2) == 3);
    CHECK(pm.data(0, 3) == 4);
    CHECK(pm.segment_lengths == std::vector<int>{2, 3});
}

TEST_CASE("piling drops short replicates with a warning") {
    TimeSeriesDataset ds = small_dataset();
    std::vector<std::string> warnings;
    const PiledMatrix pm = pile(ds, 3, &warnings);
    CHECK(pm.rows() == 1);
    CHECK(warnings.size() == 1);
    CHECK_THROWS_AS(pile(ds, 4), ArgumentError);
}

TEST_CASE("piling count property") {
    CHECK(checks::piling_count_failures(3, 300) == 0);
}

TEST_CASE("statistics do not depend on replicate order") {
    TimeSeriesDataset ds = small_dataset();
    ds.replicates[0].col(1) << 0.3, -1.0, 2.5;
    TimeSeriesDataset swapped = ds;
    std::swap(swapped.replicates[0], swapped.replicates[1]);
    std::swap(swapped.replicate_ids[0], swapped.replicate_ids[1]);
    const SufficientStats a = sufficient_stats(pile(ds, 1)), b = sufficient_stats(pile(swapped, 1));
    CHECK(a.covariance == b.covariance);
    CHECK(a.means == b.means);
}

TEST_CASE("sufficient statistics use MLE normalisation") {
    TimeSeriesDataset ds;
    ds.variables = {"x"};
    Eigen::MatrixXd r(4, 1);
    r << 1, 2, 3, 4;
    ds.replicates = {r};
    ds.replicate_ids = {"a"};
    const SufficientStats s = sufficient_stats(pile(ds, 0));
    CHECK(s.n == 4);
    CHECK(s.means(0) == doctest::Approx(2.5));
    CHECK(s.covariance(0, 0) == doctest::Approx(1.25));
}
