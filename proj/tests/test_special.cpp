#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "hiercheck/normal.hpp"
#include "hiercheck/special.hpp"

using namespace hiercheck;
using Catch::Approx;

namespace {
constexpr double pi2 = std::numbers::pi * std::numbers::pi;

// Direct series sum_{k>=0} (x+k)^-2 with an Euler-Maclaurin tail, independent
// of the library's recurrence/asymptotic scheme.
double trigamma_series(double x) {
    const int K = 2000;
    double s = 0.0;
    for (int k = 0; k < K; ++k) s += 1.0 / ((x + k) * (x + k));
    const double z = x + K;
    return s + 1.0 / z + 1.0 / (2.0 * z * z) + 1.0 / (6.0 * z * z * z) - 1.0 / (30.0 * std::pow(z, 5));
}
}  // namespace

TEST_CASE("trigamma closed-form values") {
    CHECK(std::fabs(trigamma(1.0) - pi2 / 6.0) < 1e-12);
    CHECK(std::fabs(trigamma(2.0) - (pi2 / 6.0 - 1.0)) < 1e-12);
    CHECK(std::fabs(trigamma(0.5) - pi2 / 2.0) < 1e-12);
    CHECK(std::fabs(trigamma(1.5) - (pi2 / 2.0 - 4.0)) < 1e-12);
}

TEST_CASE("trigamma recurrence and series") {
    for (double x : {0.01, 0.3, 1.7, 4.2, 9.9, 37.0, 250.0}) {
        const double lhs = trigamma(x + 1.0);
        const double rhs = trigamma(x) - 1.0 / (x * x);
        CHECK(std::fabs(lhs - rhs) < 1e-12 * std::max(1.0, std::fabs(trigamma(x))));
        CHECK(trigamma(x) == Approx(trigamma_series(x)).epsilon(1e-12));
    }
}

TEST_CASE("trigamma rejects nonpositive arguments") {
    CHECK_THROWS(trigamma(0.0));
    CHECK_THROWS(trigamma(-1.5));
}

TEST_CASE("log_sum_exp is stable") {
    std::vector<double> xs{1000.0, 1000.0};
    CHECK(log_sum_exp(xs) == Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
    CHECK(log_add_exp(-1000.0, -1000.0) == Approx(-1000.0 + std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("normal cdf, log cdf and quantile") {
    CHECK(normal::std_cdf(0.0) == Approx(0.5).epsilon(1e-15));
    CHECK(normal::std_cdf(1.959963984540054) == Approx(0.975).epsilon(1e-12));
    // past the branch point erfc is still representable, so it serves as the oracle
    for (double z : {-31.0, -35.0, -37.0})
        CHECK(normal::std_log_cdf(z) == Approx(std::log(0.5 * std::erfc(-z / std::numbers::sqrt2))).epsilon(1e-12));
    for (double p : {1e-10, 0.01, 0.3, 0.5, 0.8, 0.999}) CHECK(normal::std_cdf(normal::std_quantile(p)) == Approx(p).epsilon(1e-9));
}
