#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "hiercheck/datasets.hpp"
#include "hiercheck/eb.hpp"
#include "hiercheck/surprise.hpp"

using namespace hiercheck;
using Catch::Approx;

namespace {

// With equal sampling variances v the integrated-likelihood MLE is explicit:
// mu = mean of the group means, tau^2 = max(0, S/I - v), S the sum of squares.
std::pair<double, double> equal_variance_mle(const GroupedDataset& d) {
    const auto m = d.means();
    const double v = d.mean_variances()[0];
    const double I = static_cast<double>(m.size());
    const double mu = std::accumulate(m.begin(), m.end(), 0.0) / I;
    double S = 0.0;
    for (double x : m) S += (x - mu) * (x - mu);
    return {mu, std::max(0.0, S / I - v)};
}

}  // namespace

TEST_CASE("EB fit matches the explicit equal-variance MLE") {
    for (const auto& name : {"example1", "example2", "example3", "example6"}) {
        const auto d = datasets::by_name(name);
        const auto fit = fit_mle(d);
        const auto [mu, tau2] = equal_variance_mle(d);
        CHECK(fit.mu == Approx(mu).epsilon(1e-7));
        CHECK(fit.tau2 == Approx(tau2).epsilon(1e-6));
        CHECK_FALSE(fit.boundary);
    }
}

TEST_CASE("EB fit reports the tau^2 = 0 boundary") {
    const auto d = GroupedDataset::from_means({1.0, 1.1, 0.9, 1.05}, 8, 4.0);
    const auto fit = fit_mle(d);
    CHECK(fit.boundary);
    CHECK(fit.tau2 == 0.0);
    const auto mom = eb_posterior_moments(fit, d);
    for (double v : mom.var) CHECK(v == 0.0);
}

TEST_CASE("EB fit with mu held fixed beats a tau^2 grid") {
    const auto d = datasets::example3();
    const auto fit = fit_mle(d, 0.0);
    CHECK(fit.mu == 0.0);
    const double best = integrated_loglik(0.0, fit.tau2, d);
    for (int k = 0; k <= 4000; ++k) CHECK(best >= integrated_loglik(0.0, k * 0.005, d) - 1e-9);
}

TEST_CASE("unequal variances: EB fit beats a (mu, tau^2) grid") {
    std::vector<Group> gs{{"a", 4, 0.3, 4.0, {}}, {"b", 12, 1.9, 4.0, {}}, {"c", 7, -0.4, 2.0, {}},
                          {"d", 20, 2.5, 6.0, {}}, {"e", 3, 0.8, 1.0, {}}};
    const GroupedDataset d(gs);
    const auto fit = fit_mle(d);
    for (int a = 0; a <= 200; ++a)
        for (int b = 0; b <= 200; ++b) CHECK(fit.loglik >= integrated_loglik(-1.0 + a * 0.02, b * 0.03, d) - 1e-9);
}

TEST_CASE("EB predictive densities are normalised") {
    const auto d = datasets::example1();
    const auto fit = fit_mle(d);
    for (auto kind : {StatisticKind::MaxGroupMean, StatisticKind::GrandMean}) {
        for (bool post : {false, true}) {
            const auto h = eb_predictive_density(fit, d, kind, post);
            const double a = -30.0, b = 40.0;
            const int m = 70000;
            const double step = (b - a) / m;
            double s = h(a) + h(b);
            for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * h(a + k * step);
            CHECK(s * step / 3.0 == Approx(1.0).margin(1e-6));
        }
    }
}

TEST_CASE("EB predictive simulation agrees with the exact density") {
    const auto d = datasets::example2();
    const auto fit = fit_mle(d);
    const double t = compute_statistic(d, StatisticKind::MaxGroupMean);
    SeededStream rng(3, 0);
    for (bool post : {false, true}) {
        const auto draws = post ? sample_eb_post_pred(fit, d, StatisticKind::MaxGroupMean, 400000, rng)
                                : sample_eb_prior_pred(fit, d, StatisticKind::MaxGroupMean, 400000, rng);
        const auto p = p_value_mc(draws, t);
        // exact tail: integrate the closed-form density above t
        const auto h = eb_predictive_density(fit, d, StatisticKind::MaxGroupMean, post);
        const int m = 40000;
        const double b = t + 40.0, step = (b - t) / m;
        double s = h(t) + h(b);
        for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * h(t + k * step);
        CHECK(std::fabs(p.p - s * step / 3.0) < 4.0 * p.se + 1e-4);
    }
}

TEST_CASE("closed-form EB mean test agrees with simulation") {
    const double mu0 = 0.0;
    for (const auto& d : {datasets::example3(), datasets::example4()}) {
        const double t = compute_statistic(d, StatisticKind::GrandMean);
        const auto cf = eb_mean_test_closed_form(d, mu0, t);
        const auto fit = fit_mle(d, mu0);
        SeededStream rng(17, 1);
        const auto prior = sample_eb_prior_pred(fit, d, StatisticKind::GrandMean, 1'000'000, rng);
        const auto post = sample_eb_post_pred(fit, d, StatisticKind::GrandMean, 1'000'000, rng);
        const auto pp = two_sided_p(prior, t, mu0);
        const auto pq = two_sided_p(post, t, mu0);
        CHECK(std::fabs(cf.p_prior - pp.p) < 4.0 * pp.se + 1e-6);
        CHECK(std::fabs(cf.p_post - pq.p) < 4.0 * pq.se + 1e-6);
        CHECK(cf.rps_prior > 0.0);
        CHECK(cf.rps_prior <= 1.0);
        CHECK(cf.rps_post <= 1.0);
    }
}
