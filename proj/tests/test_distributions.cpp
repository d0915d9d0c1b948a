#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "hiercheck/distributions.hpp"
#include "hiercheck/normal.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/statistics.hpp"

using namespace hiercheck;
using Catch::Approx;

namespace {

// Composite Simpson on [a, b] with m (even) panels.
template <class F>
double simpson(F f, double a, double b, int m) {
    const double h = (b - a) / m;
    double s = f(a) + f(b);
    for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

struct Setup {
    std::vector<double> theta, var;
};

const std::vector<Setup>& setups() {
    static const std::vector<Setup> s{
        {{0.0}, {1.0}},
        {{1.56, 0.64, 1.98, 0.01, 6.96}, {0.5, 0.5, 0.5, 0.5, 0.5}},
        {{-3.0, 2.0, 2.1, 0.4}, {0.04, 3.0, 0.7, 1.3}},
        {{0.2, 0.25, 0.31}, {1e-3, 2e-3, 1.5e-3}},
    };
    return s;
}

}  // namespace

TEST_CASE("order-statistic densities integrate to one") {
    for (const auto& s : setups()) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < s.theta.size(); ++i) {
            lo = std::min(lo, s.theta[i] - 12.0 * std::sqrt(s.var[i]));
            hi = std::max(hi, s.theta[i] + 12.0 * std::sqrt(s.var[i]));
        }
        for (auto e : {Extreme::Max, Extreme::Min}) {
            const double total = simpson(
                [&](double t) { return std::exp(log_extreme_density(t, s.theta, s.var, e)); }, lo, hi, 200000);
            CHECK(std::fabs(total - 1.0) < 1e-6);
        }
    }
}

TEST_CASE("single-group max density is the normal pdf") {
    const std::vector<double> th{0.7}, v{2.5};
    for (double t : {-3.0, 0.0, 0.7, 4.0}) CHECK(max_stat_density(t, th, v) == Approx(normal::pdf(t, 0.7, 2.5)).epsilon(1e-13));
}

TEST_CASE("max density agrees with brute-force simulation") {
    const auto& s = setups()[2];
    SeededStream rng(11, 0);
    const std::size_t M = 1'000'000;
    const double lo = -2.0, hi = 5.0;
    const int bins = 35;
    const double w = (hi - lo) / bins;
    std::vector<double> count(bins, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        double mx = -1e300;
        for (std::size_t i = 0; i < s.theta.size(); ++i) mx = std::max(mx, rng.normal(s.theta[i], s.var[i]));
        const int b = static_cast<int>(std::floor((mx - lo) / w));
        if (b >= 0 && b < bins) count[b] += 1.0;
    }
    for (int b = 0; b < bins; ++b) {
        const double a = lo + b * w;
        const double prob = simpson([&](double t) { return max_stat_density(t, s.theta, s.var); }, a, a + w, 200);
        const double se = std::sqrt(prob * (1.0 - prob) / M);
        CHECK(std::fabs(count[b] / M - prob) < 4.0 * se + 1e-12);
    }
}

TEST_CASE("tail probability matches the integrated density") {
    for (const auto& s : setups()) {
        const double t = s.theta.back();
        for (auto e : {Extreme::Max, Extreme::Min}) {
            double lo = t, hi = t;
            for (std::size_t i = 0; i < s.theta.size(); ++i) {
                lo = std::min(lo, s.theta[i] - 12.0 * std::sqrt(s.var[i]));
                hi = std::max(hi, s.theta[i] + 12.0 * std::sqrt(s.var[i]));
            }
            const auto f = [&](double x) { return std::exp(log_extreme_density(x, s.theta, s.var, e)); };
            const double direct = e == Extreme::Max ? simpson(f, t, hi, 100000) : simpson(f, lo, t, 100000);
            CHECK(extreme_tail_prob(t, s.theta, s.var, e) == Approx(direct).margin(1e-8));
        }
    }
}

TEST_CASE("scaled inverse chi-square moments") {
    // chi^-2(nu, a): mean nu a/(nu-2), variance 2 nu^2 a^2 / ((nu-2)^2 (nu-4))
    const double nu = 20.0, a = 1.3;
    SeededStream rng(5, 1);
    const std::size_t M = 400000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
        const double x = sample_scaled_inv_chisq(nu, a, rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / M, var = s2 / M - mean * mean;
    const double true_mean = nu * a / (nu - 2.0);
    const double true_var = 2.0 * nu * nu * a * a / ((nu - 2.0) * (nu - 2.0) * (nu - 4.0));
    CHECK(std::fabs(mean - true_mean) < 4.0 * std::sqrt(true_var / M));
    CHECK(var == Approx(true_var).epsilon(0.02));
    CHECK_THROWS(sample_scaled_inv_chisq(0.0, 1.0, rng));
}

TEST_CASE("alternative second-level laws have their textbook moments") {
    SeededStream rng(9, 2);
    const std::size_t M = 400000;
    struct Case {
        Alternative alt;
        double mean, var;
    };
    const double g = 0.5772156649015329;
    const std::vector<Case> cases{
        {Alternative::exponential(1.0), 1.0, 1.0},
        {Alternative::gumbel(0.0, 2.0), 2.0 * g, std::numbers::pi * std::numbers::pi / 6.0 * 4.0},
        {Alternative::lognormal(0.0, 1.0), std::exp(0.5), (std::exp(1.0) - 1.0) * std::exp(1.0)},
    };
    for (const auto& c : cases) {
        double s = 0.0;
        for (std::size_t m = 0; m < M; ++m) s += sample_alternative(c.alt, rng);
        CHECK(std::fabs(s / M - c.mean) < 5.0 * std::sqrt(c.var / M));
    }
    CHECK_THROWS(Alternative::parse("cauchy"));
}

TEST_CASE("seeded streams are reproducible and derive independently of use") {
    SeededStream a(42, 3), b(42, 3);
    const auto da = a.derive(5);
    for (int k = 0; k < 10; ++k) a.normal();
    const auto da2 = a.derive(5);
    CHECK(da.stream_id() == da2.stream_id());
    SeededStream c(42, 3), d(42, 4);
    bool differ = false;
    for (int k = 0; k < 10; ++k) {
        const double u = b.uniform();
        CHECK(u == c.uniform());
        differ = differ || u != d.uniform();
    }
    CHECK(differ);
}
