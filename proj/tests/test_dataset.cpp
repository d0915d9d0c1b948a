#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "hiercheck/dataset.hpp"
#include "hiercheck/datasets.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/statistics.hpp"

using namespace hiercheck;
using Catch::Approx;

namespace {
GroupedDataset parse_grouped(const std::string& s) {
    std::istringstream in(s);
    return read_grouped_csv(in);
}
CountDataset parse_counts(const std::string& s) {
    std::istringstream in(s);
    return read_count_csv(in);
}
const std::string data_dir = HIERCHECK_DATA_DIR;
}  // namespace

TEST_CASE("stats-form CSV") {
    const auto d = parse_grouped("# comment\ngroup_id,n,mean,sigma2\na,8,1.5,4\n\nb, 8 ,-0.25,4\n");
    REQUIRE(d.size() == 2);
    CHECK(d.group(0).label == "a");
    CHECK(d.group(1).mean == -0.25);
    CHECK(d.has_known_variances());
    CHECK(d.mean_variances()[0] == Approx(0.5));
}

TEST_CASE("long-form CSV groups by first appearance") {
    const auto d = parse_grouped("group_id,value\nz,1\na,2\nz,3\na,6\nz,5\n");
    REQUIRE(d.size() == 2);
    CHECK(d.group(0).label == "z");
    CHECK(d.group(0).n == 3);
    CHECK(d.group(0).mean == Approx(3.0));
    CHECK(d.group(1).mean == Approx(4.0));
    CHECK_FALSE(d.has_known_variances());
}

TEST_CASE("malformed CSV is rejected") {
    CHECK_THROWS_AS(parse_grouped(""), data_error);
    CHECK_THROWS_AS(parse_grouped("id,value\n1,2\n"), data_error);
    CHECK_THROWS_AS(parse_grouped("group_id,n,mean\n1,8\n"), data_error);
    CHECK_THROWS_AS(parse_grouped("group_id,n,mean\n1,8,abc\n"), data_error);
    CHECK_THROWS_AS(parse_grouped("group_id,n,mean\n1,0,1.0\n"), data_error);
    CHECK_THROWS_AS(parse_grouped("group_id,n,mean\n1,2.5,1.0\n"), data_error);
    CHECK_THROWS_AS(read_grouped_csv(std::string("/nonexistent/file.csv")), data_error);
}

TEST_CASE("count CSV and its invariants") {
    const auto d = parse_counts("group_id,n,y\nA,150,18\nB,100,25\n");
    REQUIRE(d.size() == 2);
    CHECK(d.group(1).rate() == Approx(0.25));
    CHECK_THROWS_AS(parse_counts("group_id,n,y\nA,10,11\n"), data_error);
    CHECK_THROWS_AS(parse_counts("group_id,n,y\nA,10,-1\n"), data_error);
    CHECK_THROWS_AS(parse_counts("group_id,n\nA,10\n"), data_error);
    CHECK_NOTHROW(read_count_csv(data_dir + "/counts_template.csv"));
}

TEST_CASE("shipped data files match the built-in datasets") {
    for (const auto& name : datasets::names()) {
        const auto file = read_grouped_csv(data_dir + "/" + name + ".csv");
        const auto built = datasets::by_name(name);
        REQUIRE(file.size() == built.size());
        for (std::size_t i = 0; i < file.size(); ++i) {
            CHECK(file.group(i).n == built.group(i).n);
            CHECK(file.group(i).mean == Approx(built.group(i).mean).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(datasets::by_name("nope"), data_error);
}

TEST_CASE("statistics of the built-in examples") {
    const auto ex1 = datasets::example1();
    CHECK(compute_statistic(ex1, StatisticKind::MaxGroupMean) == 6.96);
    CHECK(compute_statistic(ex1, StatisticKind::MinGroupMean) == 0.01);
    CHECK(compute_statistic(ex1, StatisticKind::GrandMean) == Approx((1.56 + 0.64 + 1.98 + 0.01 + 6.96) / 5.0));
    // mean of the four non-maximal groups
    CHECK(conditional_mle_shift(ex1) == Approx(1.0475).epsilon(1e-12));
    CHECK(conditional_mle_shift(ex1, Extreme::Min) == Approx((1.56 + 0.64 + 1.98 + 6.96) / 4.0).epsilon(1e-12));

    const auto g = datasets::groups5x6();
    CHECK(g.size() == 5);
    CHECK(g.group(4).mean == Approx((6.32 + 3.66 + 4.51 + 3.29 + 5.61 + 3.27) / 6.0));
    // pooled within-group MLE: total within SS / N
    double ss = 0.0;
    for (const auto& gr : g.groups())
        for (double x : gr.observations) ss += (x - gr.mean) * (x - gr.mean);
    CHECK(g.pooled_sigma2_mle() == Approx(ss / 30.0).epsilon(1e-12));
}
