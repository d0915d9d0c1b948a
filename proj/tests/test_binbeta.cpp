#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "hiercheck/binbeta.hpp"
#include "hiercheck/harness/checks.hpp"

using namespace hiercheck;
using Catch::Approx;

namespace {

// Twelve groups, one with a clearly higher event rate. Made-up counts.
CountDataset one_high_group() {
    const std::vector<std::pair<long, long>> ny{{150, 14}, {210, 21}, {95, 9},  {320, 29}, {180, 20}, {260, 22},
                                                {140, 12}, {400, 38}, {120, 13}, {230, 19}, {175, 17}, {143, 41}};
    std::vector<CountGroup> gs;
    for (std::size_t i = 0; i < ny.size(); ++i) gs.push_back({std::to_string(i + 1), ny[i].first, ny[i].second});
    return CountDataset(gs);
}

// Regularised incomplete beta for integer parameters: Pr(Bin(a+b-1, x) >= a).
double beta_cdf_integer(double x, int a, int b) {
    const int m = a + b - 1;
    double s = 0.0;
    for (int j = a; j <= m; ++j)
        s += std::exp(std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0) + j * std::log(x) +
                      (m - j) * std::log1p(-x));
    return s;
}

double ks_against(std::vector<double> xs, auto cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double F = cdf(xs[k]);
        d = std::max({d, std::fabs(F - k / n), std::fabs((k + 1) / n - F)});
    }
    return d;
}

double batch_se(const std::vector<double>& x, std::size_t batches = 50) {
    const std::size_t b = x.size() / batches;
    std::vector<double> m(batches);
    for (std::size_t k = 0; k < batches; ++k) m[k] = std::accumulate(x.begin() + k * b, x.begin() + (k + 1) * b, 0.0) / b;
    const double mean = std::accumulate(m.begin(), m.end(), 0.0) / batches;
    double v = 0.0;
    for (double y : m) v += (y - mean) * (y - mean);
    return std::sqrt(v / (batches - 1) / batches);
}

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

ChainConfig chain(std::size_t iters, std::size_t burn, std::uint64_t stream) {
    ChainConfig c;
    c.iterations = iters;
    c.burn_in = burn;
    c.stream = stream;
    return c;
}

}  // namespace

TEST_CASE("Jeffreys density at (1, 1) from trigamma identities") {
    const double p1 = std::numbers::pi * std::numbers::pi / 6.0;  // psi_1(1)
    const double p2 = p1 - 1.0;                                     // psi_1(2)
    const double bracket = (p1 - p2) * (p1 - p2) - p2 * p2;
    CHECK(jeffreys_logdensity(1.0, 1.0) == Approx(0.5 * std::log(bracket)).epsilon(1e-12));
    CHECK(bracket == Approx(0.58406).margin(1e-5));
}

TEST_CASE("Jeffreys density is symmetric and finite on a random grid") {
    SeededStream rng(8, 0);
    for (int k = 0; k < 10000; ++k) {
        const double a = std::exp(std::log(0.01) + rng.uniform() * std::log(1e4));
        const double b = std::exp(std::log(0.01) + rng.uniform() * std::log(1e4));
        const double l = jeffreys_logdensity(a, b);
        CHECK(std::isfinite(l));
        CHECK(l == Approx(jeffreys_logdensity(b, a)).epsilon(1e-12));
    }
    CHECK_THROWS(jeffreys_logdensity(0.0, 1.0));
}

TEST_CASE("beta-binomial MLE beats a log-grid") {
    for (const auto& d : {one_high_group(), CountDataset({{"a", 100, 20}, {"b", 100, 80}})}) {
        const auto fit = betabinom_fit_mle(d);
        CHECK(fit.loglik == Approx(betabinom_loglik(d, fit.hyper.alpha, fit.hyper.beta)).epsilon(1e-12));
        for (int i = 0; i < 100; ++i)
            for (int j = 0; j < 100; ++j) {
                const double a = std::exp(-4.0 + 10.0 * i / 99.0), b = std::exp(-4.0 + 10.0 * j / 99.0);
                CHECK(fit.loglik >= betabinom_loglik(d, a, b) - 1e-7);
            }
    }
}

TEST_CASE("beta-binomial MLE: mean matching and scale recovery") {
    const auto two = betabinom_fit_mle(CountDataset({{"a", 100, 20}, {"b", 100, 80}}));
    CHECK(two.hyper.mean() == Approx(0.5).margin(0.02));

    SeededStream rng(2, 5);
    const auto sim = harness::simulate_counts(50, 200, 2.0, 5.0, rng);
    const auto fit = betabinom_fit_mle(sim);
    CHECK(fit.hyper.alpha == Approx(2.0).epsilon(0.3));
    CHECK(fit.hyper.beta == Approx(5.0).epsilon(0.3));
}

TEST_CASE("beta-binomial MLE flags degenerate data") {
    const auto fit = betabinom_fit_mle(CountDataset({{"a", 100, 10}, {"b", 200, 20}, {"c", 50, 5}}));
    CHECK(fit.boundary);
}

TEST_CASE("conjugate beta update is exact") {
    SeededStream rng(12, 0);
    // alpha = 2, beta = 3, y = 7, n = 20  ->  Beta(9, 16)
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.beta(9.0, 16.0);
    CHECK(ks_against(xs, [](double x) { return beta_cdf_integer(x, 9, 16); }) < 0.01);
    // small shapes exercise the log-gamma path: Beta(0.4, 0.7) has CDF via Simpson on the density
    for (auto& x : xs) x = rng.beta(0.4, 0.7);
    std::sort(xs.begin(), xs.end());
    const double lb = log_beta_fn(0.4, 0.7);
    // substitute x = u^(1/0.4) to remove the singularity at 0; the one at 1 is integrable and mild here
    auto cdf = [&](double x) {
        const double U = std::pow(x, 0.4);
        const int m = 2000;
        const double h = U / m;
        auto g = [&](double u) {
            const double t = std::pow(u, 1.0 / 0.4);
            return u >= 1.0 ? 0.0 : std::exp(-0.3 * std::log1p(-t) - lb) / 0.4;
        };
        double s = g(0.0) + g(U);
        for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * g(k * h);
        return s * h / 3.0;
    };
    std::vector<double> sub;
    for (std::size_t k = 0; k < xs.size(); k += 10) sub.push_back(xs[k]);
    CHECK(ks_against(sub, cdf) < 0.02);
}

TEST_CASE("rate density: single group and normalisation") {
    const std::vector<double> th{0.3}, n{150.0};
    CHECK(rate_extreme_density(0.33, th, n, Extreme::Max) == Approx(normal::pdf(0.33, 0.3, 0.3 * 0.7 / 150.0)).epsilon(1e-12));
    const auto d = one_high_group();
    std::vector<double> theta, sizes;
    for (const auto& g : d.groups()) {
        theta.push_back(g.rate());
        sizes.push_back(static_cast<double>(g.n));
    }
    for (auto e : {Extreme::Max, Extreme::Min}) {
        const double a = -0.5, b = 1.5;
        const int m = 200000;
        const double h = (b - a) / m;
        double s = rate_extreme_density(a, theta, sizes, e) + rate_extreme_density(b, theta, sizes, e);
        for (int k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * rate_extreme_density(a + k * h, theta, sizes, e);
        CHECK(s * h / 3.0 == Approx(1.0).margin(1e-5));
    }
}

TEST_CASE("normal approximation tracks simulated binomial maxima for n >= 50") {
    const std::vector<double> th{0.10, 0.12, 0.15, 0.11}, n{60.0, 200.0, 120.0, 90.0};
    std::vector<double> v(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) v[i] = rate_variance(th[i], n[i]);
    SeededStream rng(4, 4);
    const std::size_t M = 200000;
    std::vector<double> mx(M);
    for (auto& m : mx) {
        double best = 0.0;
        for (std::size_t i = 0; i < th.size(); ++i)
            best = std::max(best, (static_cast<double>(rng.binomial(static_cast<long>(n[i]), th[i])) + rng.uniform() - 0.5) / n[i]);
        m = best;
    }
    // counts are jittered by U(-1/2, 1/2) so the simulated rates have a density;
    // what remains is the skewness of the binomial, about 0.01-0.02 here
    for (double t : {0.12, 0.135, 0.15, 0.165, 0.195, 0.225}) {
        const double sim = p_value_mc(mx, t).p;
        CHECK(extreme_tail_prob(t, th, v, Extreme::Max) == Approx(sim).margin(0.025));
    }
}

TEST_CASE("posterior sampler: shrinkage toward the pooled rate") {
    const auto d = one_high_group();
    const auto post = binbeta_posterior_sampler(d, chain(30000, 5000, 1));
    const auto rates = d.rates();
    double yt = 0.0, nt = 0.0;
    for (const auto& g : d.groups()) {
        yt += static_cast<double>(g.y);
        nt += static_cast<double>(g.n);
    }
    const double pooled = yt / nt;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < post.size(); ++k) m += post.theta_at(k)[i];
        m /= static_cast<double>(post.size());
        CHECK(m >= std::min(rates[i], pooled) - 0.003);
        CHECK(m <= std::max(rates[i], pooled) + 0.003);
    }
    CHECK(post.hyper_acceptance > 0.05);
    CHECK(post.hyper_acceptance < 0.95);
}

TEST_CASE("posterior sampler: theta margins match their conjugate conditional means") {
    // at stationarity E[theta_i] = E[(alpha + y_i) / (alpha + beta + n_i)]
    const auto d = one_high_group();
    const auto post = binbeta_posterior_sampler(d, chain(60000, 5000, 2));
    for (std::size_t i : {0u, 11u}) {
        std::vector<double> th(post.size()), cm(post.size());
        const auto& g = d.group(i);
        for (std::size_t k = 0; k < post.size(); ++k) {
            th[k] = post.theta_at(k)[i];
            cm[k] = (post.alpha[k] + g.y) / (post.alpha[k] + post.beta[k] + g.n);
        }
        CHECK(std::fabs(mean(th) - mean(cm)) < 5.0 * std::hypot(batch_se(th), batch_se(cm)));
    }
}

TEST_CASE("binomial partial posterior with a constant statistic density is the posterior") {
    const auto d = one_high_group();
    const auto post = binbeta_posterior_sampler(d, chain(60000, 5000, 3));
    const auto pp = binbeta_partial_posterior_sampler(d, chain(60000, 5000, 4), ConstantStatDensity{});
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<double> a(post.size()), b(pp.size());
        for (std::size_t k = 0; k < post.size(); ++k) a[k] = post.theta_at(k)[i];
        for (std::size_t k = 0; k < pp.size(); ++k) b[k] = pp.theta_at(k)[i];
        CHECK(std::fabs(mean(a) - mean(b)) < 5.0 * std::hypot(batch_se(a), batch_se(b)));
    }
    std::vector<double> la(post.size()), lb(pp.size());
    for (std::size_t k = 0; k < post.size(); ++k) la[k] = std::log(post.alpha[k]);
    for (std::size_t k = 0; k < pp.size(); ++k) lb[k] = std::log(pp.alpha[k]);
    CHECK(std::fabs(mean(la) - mean(lb)) < 5.0 * std::hypot(batch_se(la), batch_se(lb)));
}

TEST_CASE("EB prior predictive is less conservative than EB posterior for a high maximum") {
    const auto d = one_high_group();
    const auto fit = betabinom_fit_mle(d);
    const double t = compute_statistic(d, StatisticKind::MaxRate);
    SeededStream r1(1, 1), r2(1, 2);
    const auto prior = binbeta_eb_predictive(d, fit.hyper, false, StatisticKind::MaxRate, 20000, r1, 1);
    const auto post = binbeta_eb_predictive(d, fit.hyper, true, StatisticKind::MaxRate, 20000, r2, 1);
    CHECK(p_value_mc(prior.draws, t).p < p_value_mc(post.draws, t).p);
}

TEST_CASE("binomial conflict measure and ordering") {
    const auto d = one_high_group();
    const auto order = order_by_rate(d);
    CHECK(order.back() == 11);
    const BetaHyper h{20.0, 180.0};
    CHECK(binbeta_conflict_c(d.group(11), h) > binbeta_conflict_c(d.group(0), h));
}
