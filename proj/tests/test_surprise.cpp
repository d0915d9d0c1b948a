#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hiercheck/normal.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

using namespace hiercheck;
using Catch::Approx;

TEST_CASE("Monte Carlo p-value counts ties in the tail") {
    const std::vector<double> d{1.0, 2.0, 2.0, 3.0};
    CHECK(p_value_mc(d, 2.0).p == 0.75);
    CHECK(p_value_mc(d, 2.0, Tail::Lower).p == 0.75);
    CHECK(p_value_mc(d, 3.5).p == 0.0);
    CHECK(p_value_mc(d, 2.0).se == Approx(std::sqrt(0.75 * 0.25 / 4.0)));
    CHECK(two_sided_p(d, 3.0, 2.0).p == 0.5);
    CHECK_THROWS(p_value_mc(std::vector<double>{}, 0.0));
}

TEST_CASE("RPS of a normal reference is exp(-z^2/2)") {
    const DensityFn h = [](double t) { return normal::pdf(t, 1.0, 4.0); };
    for (double t : {1.0, 2.5, -3.0, 7.0}) {
        const double z = (t - 1.0) / 2.0;
        CHECK(rps_rao_blackwell(h, t, {-20.0, 20.0}) == Approx(std::exp(-0.5 * z * z)).epsilon(1e-9));
    }
}

TEST_CASE("density supremum on a skewed mixture") {
    // mode of the max of two N(0,1): f(t) = 2 phi(t) Phi(t); f'(t) = 0 at t* solving phi(t) = t Phi(t)
    const std::vector<double> th{0.0, 0.0}, v{1.0, 1.0};
    const DensityFn h = [&](double t) { return max_stat_density(t, th, v); };
    double a = 0.0, b = 2.0;
    for (int k = 0; k < 200; ++k) {
        const double m = 0.5 * (a + b);
        (normal::std_pdf(m) - m * normal::std_cdf(m) > 0.0 ? a : b) = m;
    }
    const double mode = 0.5 * (a + b);
    CHECK(density_supremum(h, {-8.0, 8.0}) == Approx(h(mode)).epsilon(1e-12));
}

TEST_CASE("the relative-to-mu0 RPS form reduces to the plain ratio") {
    SeededStream rng(2024, 0);
    for (int rep = 0; rep < 200; ++rep) {
        NormalMixture mix;
        const int K = 1 + static_cast<int>(rng.uniform() * 5);
        for (int k = 0; k < K; ++k) mix.add(rng.normal(0.0, 4.0), 0.2 + 3.0 * rng.uniform());
        const DensityFn h = mix;
        const double t = rng.normal(0.0, 9.0), mu0 = rng.normal(0.0, 1.0);
        const Interval iv{-15.0, 15.0};
        if (h(mu0) < 1e-200) continue;
        CHECK(rps_relative_to(h, t, mu0, iv) == Approx(rps_rao_blackwell(h, t, iv)).epsilon(1e-10));
    }
}

TEST_CASE("extreme mixture averages its components") {
    ExtremeMixture m(2, Extreme::Max);
    const std::vector<double> a{0.0, 1.0}, b{2.0, -1.0}, v{1.0, 0.5};
    m.add(a, v);
    m.add(b, v);
    for (double t : {-1.0, 0.5, 2.0})
        CHECK(m(t) == Approx(0.5 * (max_stat_density(t, a, v) + max_stat_density(t, b, v))).epsilon(1e-14));
    CHECK_THROWS(m.add(std::vector<double>{1.0}, std::vector<double>{1.0}));
}

TEST_CASE("search interval pads by four standard deviations") {
    const std::vector<double> d{0.0, 2.0};
    const auto iv = search_interval(d);
    CHECK(iv.lo == Approx(-4.0));
    CHECK(iv.hi == Approx(6.0));
}

TEST_CASE("construction names round-trip") {
    for (auto c : {Construction::EBPrior, Construction::EBPost, Construction::Posterior, Construction::PartialPosterior})
        CHECK(parse_construction(to_string(c)) == c);
    CHECK(parse_construction("ppp") == Construction::PartialPosterior);
    CHECK_THROWS_AS(parse_construction("bogus"), config_error);
}
