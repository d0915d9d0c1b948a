#pragma once

// Empirical-Bayes (plug-in) machinery for the normal-normal model: the
// integrated likelihood of (mu, tau^2), its maximiser, and the EB prior and
// EB posterior predictive distributions of a checking statistic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "hiercheck/dataset.hpp"
#include "hiercheck/normal.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck {

struct EBFit {
    double mu = 0.0;
    double tau2 = 0.0;
    double loglik = 0.0;
    bool boundary = false;    // tau2 == 0
    bool degenerate = false;  // single group with mu free
};

// sum_i log N(xbar_i | mu, sigma_i^2/n_i + tau^2)
inline double integrated_loglik(double mu, double tau2, std::span<const double> means,
                                std::span<const double> mean_vars) {
    if (tau2 < 0.0) throw std::invalid_argument("tau2 must be nonnegative");
    double s = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) s += normal::log_pdf(means[i], mu, mean_vars[i] + tau2);
    return s;
}

inline double integrated_loglik(double mu, double tau2, const GroupedDataset& data) {
    const auto m = data.means();
    const auto v = data.mean_variances();
    return integrated_loglik(mu, tau2, m, v);
}

namespace detail {

inline double profile_mu(double tau2, std::span<const double> means, std::span<const double> mean_vars) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        const double w = 1.0 / (mean_vars[i] + tau2);
        num += w * means[i];
        den += w;
    }
    return num / den;
}

}  // namespace detail

// Maximum-likelihood (mu, tau^2) for the integrated likelihood. mu is profiled
// out as the precision-weighted mean (or held at fixed_mu); tau^2 is found by
// golden section on log(tau^2 + 1e-12), then compared against the tau^2 = 0
// boundary.
inline EBFit fit_mle(const GroupedDataset& data, std::optional<double> fixed_mu = std::nullopt) {
    const auto means = data.means();
    const auto vars = data.mean_variances();
    const std::size_t I = means.size();

    if (I == 1 && !fixed_mu) {
        EBFit f;
        f.mu = means[0];
        f.tau2 = 0.0;
        f.loglik = integrated_loglik(f.mu, 0.0, means, vars);
        f.boundary = true;
        f.degenerate = true;
        return f;
    }

    auto mu_at = [&](double tau2) { return fixed_mu ? *fixed_mu : detail::profile_mu(tau2, means, vars); };
    auto prof = [&](double tau2) { return integrated_loglik(mu_at(tau2), tau2, means, vars); };

    constexpr double eps = 1e-12;
    double centre = 0.0;
    for (double m : means) centre += m;
    centre /= static_cast<double>(I);
    double spread = 0.0;
    for (double m : means) spread += (m - centre) * (m - centre);
    spread /= static_cast<double>(I);
    if (fixed_mu) {
        double d = 0.0;
        for (double m : means) d += (m - *fixed_mu) * (m - *fixed_mu);
        spread = std::max(spread, d / static_cast<double>(I));
    }

    EBFit best;
    best.tau2 = 0.0;
    best.mu = mu_at(0.0);
    best.loglik = prof(0.0);
    best.boundary = true;
    if (!(spread > 0.0)) return best;

    double upper = 10.0 * spread;
    for (int expand = 0; expand < 8; ++expand) {
        const double s_lo = std::log(eps), s_hi = std::log(upper + eps);
        auto g = [&](double s) { return prof(std::max(0.0, std::exp(s) - eps)); };

        // coarse scan to bracket the mode, then golden section
        constexpr int kScan = 64;
        int jbest = 0;
        double vbest = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < kScan; ++j) {
            const double v = g(s_lo + (s_hi - s_lo) * j / (kScan - 1));
            if (v > vbest) {
                vbest = v;
                jbest = j;
            }
        }
        double a = s_lo + (s_hi - s_lo) * std::max(0, jbest - 1) / (kScan - 1);
        double b = s_lo + (s_hi - s_lo) * std::min(kScan - 1, jbest + 1) / (kScan - 1);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = g(c), fd = g(d);
        while (b - a > 1e-10) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = g(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = g(d);
            }
        }
        const double s_opt = fc > fd ? c : d;
        const double tau2 = std::max(0.0, std::exp(s_opt) - eps);
        const double ll = prof(tau2);
        if (ll > best.loglik) {
            best.tau2 = tau2;
            best.mu = mu_at(tau2);
            best.loglik = ll;
            best.boundary = false;
        }
        if (jbest < kScan - 1) break;
        upper *= 10.0;  // mode at the top of the range: widen and retry
    }
    return best;
}

// Unknown common sigma^2: plug in the pooled within-group MLE.
inline GroupedDataset with_plugin_variance(const GroupedDataset& data) {
    if (data.has_known_variances()) return data;
    return data.with_common_variance(data.pooled_sigma2_mle());
}

// Conditional moments of theta_i given the data under the fitted prior
// N(mu_hat, tau2_hat). tau2_hat = 0 yields the point-mass limit (mu_hat, 0).
struct EBPosteriorMoments {
    std::vector<double> mean;
    std::vector<double> var;
};

inline EBPosteriorMoments eb_posterior_moments(const EBFit& fit, const GroupedDataset& data) {
    const auto m = data.means();
    const auto v = data.mean_variances();
    EBPosteriorMoments out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (fit.tau2 <= 0.0) {
            out.mean.push_back(fit.mu);
            out.var.push_back(0.0);
        } else {
            const double prec = 1.0 / v[i] + 1.0 / fit.tau2;
            out.mean.push_back((m[i] / v[i] + fit.mu / fit.tau2) / prec);
            out.var.push_back(1.0 / prec);
        }
    }
    return out;
}

namespace detail {

inline double statistic_of_means(std::span<const double> xbar, std::span<const double> sizes, StatisticKind kind) {
    switch (kind) {
        case StatisticKind::MaxGroupMean: return extreme_value(xbar, Extreme::Max);
        case StatisticKind::MinGroupMean: return extreme_value(xbar, Extreme::Min);
        case StatisticKind::GrandMean: return weighted_grand_mean(xbar, sizes);
        default: throw config_error("statistic '" + to_string(kind) + "' cannot be computed from group means");
    }
}

// theta_i ~ N(centre_i, spread_i), xbar_i ~ N(theta_i, v_i), T(xbar).
inline std::vector<double> simulate_statistic(std::span<const double> centre, std::span<const double> spread,
                                              const GroupedDataset& data, StatisticKind kind, std::size_t M,
                                              SeededStream& rng) {
    if (M == 0) throw std::invalid_argument("number of predictive draws must be positive");
    const auto v = data.mean_variances();
    const auto n = data.sizes();
    const std::size_t I = v.size();
    std::vector<double> xbar(I), out;
    out.reserve(M);
    for (std::size_t l = 0; l < M; ++l) {
        for (std::size_t i = 0; i < I; ++i) {
            const double theta = spread[i] > 0.0 ? rng.normal(centre[i], spread[i]) : centre[i];
            xbar[i] = rng.normal(theta, v[i]);
        }
        out.push_back(statistic_of_means(xbar, n, kind));
    }
    return out;
}

}  // namespace detail

inline std::vector<double> sample_eb_prior_pred(const EBFit& fit, const GroupedDataset& data, StatisticKind kind,
                                                std::size_t M, SeededStream& rng) {
    const std::vector<double> centre(data.size(), fit.mu), spread(data.size(), fit.tau2);
    return detail::simulate_statistic(centre, spread, data, kind, M, rng);
}

inline std::vector<double> sample_eb_post_pred(const EBFit& fit, const GroupedDataset& data, StatisticKind kind,
                                               std::size_t M, SeededStream& rng) {
    const auto mom = eb_posterior_moments(fit, data);
    return detail::simulate_statistic(mom.mean, mom.var, data, kind, M, rng);
}

// Exact EB predictive density of T: under either EB construction the group
// means are independent normals, so the order-statistic density is closed form.
inline DensityFn eb_predictive_density(const EBFit& fit, const GroupedDataset& data, StatisticKind kind,
                                       bool posterior) {
    const auto v = data.mean_variances();
    const std::size_t I = v.size();
    std::vector<double> centre(I), var(I);
    const auto mom = eb_posterior_moments(fit, data);
    for (std::size_t i = 0; i < I; ++i) {
        centre[i] = posterior ? mom.mean[i] : fit.mu;
        var[i] = v[i] + (posterior ? mom.var[i] : fit.tau2);
    }
    if (kind == StatisticKind::GrandMean) {
        const auto n = data.sizes();
        double N = 0.0, m = 0.0, vv = 0.0;
        for (std::size_t i = 0; i < I; ++i) {
            N += n[i];
            m += n[i] * centre[i];
            vv += n[i] * n[i] * var[i];
        }
        const double mean = m / N, variance = vv / (N * N);
        return [mean, variance](double t) { return normal::pdf(t, mean, variance); };
    }
    const Extreme e = extreme_of(kind);
    return [centre, var, e](double t) { return std::exp(log_extreme_density(t, centre, var, e)); };
}

// Closed-form EB measures for testing mu = mu0 with the grand mean.
struct EBMeanTest {
    double tau2_hat = 0.0;
    double e_prior = 0.0, v_prior = 0.0;
    double e_post = 0.0, v_post = 0.0;
    double p_prior = 1.0, rps_prior = 1.0;
    double p_post = 1.0, rps_post = 1.0;
};

inline EBMeanTest eb_mean_test_closed_form(const GroupedDataset& data, double mu0, double t_obs) {
    const auto fit = fit_mle(data, mu0);
    const auto n = data.sizes();
    const auto s2 = data.variances();
    const auto mom = eb_posterior_moments(fit, data);
    double N = 0.0, vp = 0.0, ep = 0.0, vq = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        N += n[i];
        vp += n[i] * n[i] * (s2[i] / n[i] + fit.tau2);
        ep += n[i] * mom.mean[i];
        vq += n[i] * n[i] * (s2[i] / n[i] + mom.var[i]);
    }
    EBMeanTest r;
    r.tau2_hat = fit.tau2;
    r.e_prior = mu0;
    r.v_prior = vp / (N * N);
    r.e_post = ep / N;
    r.v_post = vq / (N * N);
    const double d = std::fabs(t_obs - mu0);
    r.p_prior = 2.0 * normal::std_cdf(-d / std::sqrt(r.v_prior));
    r.rps_prior = std::exp(-d * d / (2.0 * r.v_prior));
    // two-sided tail about mu0 of N(e_post, v_post)
    const double sd = std::sqrt(r.v_post);
    r.p_post = normal::std_cdf((mu0 - d - r.e_post) / sd) + normal::std_cdf((r.e_post - mu0 - d) / sd);
    r.rps_post = std::exp(-(t_obs - r.e_post) * (t_obs - r.e_post) / (2.0 * r.v_post));
    return r;
}

}  // namespace hiercheck
