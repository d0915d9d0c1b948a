#pragma once

// Binomial-beta hierarchical model
//
//   Y_i | theta_i ~ Bin(n_i, theta_i),  theta_i | a, b ~ Beta(a, b),  pi(a, b) Jeffreys,
//
// checked with the largest or smallest observed rate. The rate statistic's
// density uses the normal approximation y_i/n_i ~ N(theta_i, theta_i(1-theta_i)/n_i).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiercheck/conflict.hpp"
#include "hiercheck/dataset.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/special.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck {

struct BetaHyper {
    double alpha = 1.0;
    double beta = 1.0;

    double mean() const { return alpha / (alpha + beta); }
    double var() const {
        const double s = alpha + beta;
        return alpha * beta / (s * s * (s + 1.0));
    }
};

inline double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// log of the Jeffreys prior for (alpha, beta) of a Beta distribution, up to a constant.
inline double jeffreys_logdensity(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("Jeffreys density needs alpha, beta > 0");
    const double tab = trigamma(a + b);
    const double det = (trigamma(a) - tab) * (trigamma(b) - tab) - tab * tab;
    if (!(det > 0.0)) throw std::logic_error("Fisher information determinant is not positive");
    return 0.5 * std::log(det);
}

inline double betabinom_loglik(const CountDataset& data, double a, double b) {
    double s = 0.0;
    const double lb = log_beta_fn(a, b);
    for (const auto& g : data.groups()) {
        const double n = static_cast<double>(g.n), y = static_cast<double>(g.y);
        s += std::lgamma(n + 1.0) - std::lgamma(y + 1.0) - std::lgamma(n - y + 1.0) + log_beta_fn(y + a, n - y + b) - lb;
    }
    return s;
}

struct BetaBinomFit {
    BetaHyper hyper;
    double loglik = 0.0;
    bool boundary = false;  // optimum ran into the parameter box
};

namespace detail {

// Nelder-Mead minimiser in two dimensions.
template <class F>
std::array<double, 2> nelder_mead_2d(F f, std::array<double, 2> x0, double step, double tol, int max_iter = 5000) {
    std::array<std::array<double, 2>, 3> p{x0, {x0[0] + step, x0[1]}, {x0[0], x0[1] + step}};
    std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int i, int j) { return v[i] < v[j]; });
        const auto best = p[o[0]], mid = p[o[1]], worst = p[o[2]];
        const double fb = v[o[0]], fm = v[o[1]], fw = v[o[2]];
        if (std::fabs(fw - fb) < tol && std::hypot(worst[0] - best[0], worst[1] - best[1]) < std::sqrt(tol)) break;
        const std::array<double, 2> c{(best[0] + mid[0]) / 2.0, (best[1] + mid[1]) / 2.0};
        auto along = [&](double t) { return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}; };
        const auto r = along(-1.0);
        const double fr = f(r);
        if (fr < fb) {
            const auto e = along(-2.0);
            const double fe = f(e);
            if (fe < fr) {
                p[o[2]] = e;
                v[o[2]] = fe;
            } else {
                p[o[2]] = r;
                v[o[2]] = fr;
            }
        } else if (fr < fm) {
            p[o[2]] = r;
            v[o[2]] = fr;
        } else {
            const auto k = fr < fw ? along(-0.5) : along(0.5);
            const double fk = f(k);
            if (fk < std::min(fr, fw)) {
                p[o[2]] = k;
                v[o[2]] = fk;
            } else {
                for (int j : {o[1], o[2]}) {
                    p[j] = {(p[j][0] + best[0]) / 2.0, (p[j][1] + best[1]) / 2.0};
                    v[j] = f(p[j]);
                }
            }
        }
    }
    const auto i = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
    return p[i];
}

}  // namespace detail

// Beta-binomial MLE of (alpha, beta), searched on (log alpha, log beta) in [-10, 15]^2.
inline BetaBinomFit betabinom_fit_mle(const CountDataset& data) {
    if (data.size() < 2) throw data_error("beta-binomial MLE needs at least two groups");
    constexpr double lo = -10.0, hi = 15.0;
    auto clampv = [&](double x) { return std::clamp(x, lo, hi); };
    auto negll = [&](const std::array<double, 2>& z) {
        return -betabinom_loglik(data, std::exp(clampv(z[0])), std::exp(clampv(z[1])));
    };
    // moment start
    const auto r = data.rates();
    const double m = std::clamp(std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size()), 1e-3, 1 - 1e-3);
    double v = 0.0;
    for (double x : r) v += (x - m) * (x - m);
    v /= static_cast<double>(r.size() - 1);
    const double k = v > 0.0 ? std::clamp(m * (1.0 - m) / v - 1.0, 0.5, 1e5) : 1e5;
    auto z = detail::nelder_mead_2d(negll, {std::log(m * k), std::log((1.0 - m) * k)}, 0.5, 1e-12);
    z = detail::nelder_mead_2d(negll, z, 0.1, 1e-14);  // restart guards against early collapse
    BetaBinomFit fit;
    fit.boundary = z[0] <= lo || z[0] >= hi || z[1] <= lo || z[1] >= hi;
    fit.hyper = {std::exp(clampv(z[0])), std::exp(clampv(z[1]))};
    fit.loglik = -negll(z);
    return fit;
}

inline double rate_variance(double theta, double n) { return std::max(theta * (1.0 - theta) / n, 1e-12); }

// Density of the largest (smallest) observed rate given theta, normal approximation.
inline double rate_extreme_density(double t, std::span<const double> theta, std::span<const double> n, Extreme e) {
    std::vector<double> v(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!(theta[i] >= 0.0 && theta[i] <= 1.0)) throw std::domain_error("rate parameter outside [0, 1]");
        v[i] = rate_variance(theta[i], n[i]);
    }
    return std::exp(log_extreme_density(t, theta, v, e));
}

struct BinBetaChain {
    std::string sampler;
    std::size_t groups = 0;
    std::vector<double> sizes;
    std::vector<double> theta;  // retained x groups
    std::vector<double> alpha;
    std::vector<double> beta;
    std::vector<double> theta_acceptance;
    double hyper_acceptance = 0.0;

    std::size_t size() const { return alpha.size(); }
    bool empty() const { return alpha.empty(); }
    std::span<const double> theta_at(std::size_t k) const { return std::span(theta).subspan(k * groups, groups); }
};

namespace detail {

inline double hyper_log_target(double la, double lb, double sum_log_t, double sum_log_1mt, std::size_t I) {
    const double a = std::exp(la), b = std::exp(lb);
    return (a - 1.0) * sum_log_t + (b - 1.0) * sum_log_1mt - static_cast<double>(I) * log_beta_fn(a, b) +
           jeffreys_logdensity(a, b) + la + lb;
}

// Shared sweep for the posterior (use_density = false) and partial posterior.
template <class StatDensity>
BinBetaChain binbeta_sampler(const CountDataset& data, const ChainConfig& cfg, StatDensity* density,
                             double hyper_sd) {
    cfg.validate();
    if (data.size() < 2) throw data_error("binomial-beta sampler needs at least two groups");
    const std::size_t I = data.size();
    auto rng = cfg.make_stream();

    std::vector<double> n(I), y(I), theta(I), vars(I);
    for (std::size_t i = 0; i < I; ++i) {
        n[i] = static_cast<double>(data.group(i).n);
        y[i] = static_cast<double>(data.group(i).y);
        theta[i] = (y[i] + 0.5) / (n[i] + 1.0);
        vars[i] = rate_variance(theta[i], n[i]);
    }
    const double m = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(I);
    double la = std::log(m * 20.0), lb = std::log((1.0 - m) * 20.0);

    if (density) {
        density->reset(theta, vars);
        if (!std::isfinite(density->log_density())) throw sampler_abort("rate density is not finite at the initial state");
    }

    BinBetaChain out;
    out.sampler = density ? "binbeta-partial-posterior" : "binbeta-posterior";
    out.groups = I;
    out.sizes = n;
    out.theta.reserve(cfg.retained() * I);
    std::vector<std::size_t> acc(I, 0), window(I, 0);
    std::size_t hyper_acc = 0, counted = 0;

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const double a = std::exp(la), b = std::exp(lb);
        const bool counting = it >= cfg.burn_in;
        for (std::size_t i = 0; i < I; ++i) {
            const double x = rng.beta(a + y[i], b + n[i] - y[i]);
            if (!density) {
                theta[i] = x;
                continue;
            }
            // Independence move only. Under the normal approximation 1/f_T grows
            // without bound as a theta_i nears 0 or 1, and local moves walk there.
            const double vx = rate_variance(x, n[i]);
            double log_alpha = density->log_density() - density->log_density_with(i, x, vx);
            if (std::isnan(log_alpha)) log_alpha = -std::numeric_limits<double>::infinity();
            if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
                theta[i] = x;
                vars[i] = vx;
                density->accept();
                ++window[i];
                if (counting) ++acc[i];
            }
        }

        double slt = 0.0, sl1 = 0.0;
        for (double t : theta) {
            slt += std::log(std::max(t, 1e-300));
            sl1 += std::log(std::max(1.0 - t, 1e-300));
        }
        const double la2 = la + hyper_sd * rng.normal(), lb2 = lb + hyper_sd * rng.normal();
        const double log_alpha = hyper_log_target(la2, lb2, slt, sl1, I) - hyper_log_target(la, lb, slt, sl1, I);
        if (!std::isnan(log_alpha) && (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha)) {
            la = la2;
            lb = lb2;
            if (counting) ++hyper_acc;
        }
        if (counting) ++counted;

        if (density && (it + 1) % cfg.zero_accept_window == 0) {
            for (std::size_t i = 0; i < I; ++i) {
                if (window[i] == 0) {
                    throw sampler_abort("binomial-beta partial posterior: no theta_" + std::to_string(i + 1) +
                                        " proposal accepted in " + std::to_string(cfg.zero_accept_window) + " sweeps");
                }
                window[i] = 0;
            }
        }
        if (keep(cfg, it)) {
            out.theta.insert(out.theta.end(), theta.begin(), theta.end());
            out.alpha.push_back(std::exp(la));
            out.beta.push_back(std::exp(lb));
        }
    }
    out.theta_acceptance.assign(I, 1.0);
    if (density && counted) {
        for (std::size_t i = 0; i < I; ++i) out.theta_acceptance[i] = static_cast<double>(acc[i]) / static_cast<double>(counted);
    }
    out.hyper_acceptance = counted ? static_cast<double>(hyper_acc) / static_cast<double>(counted) : 0.0;
    return out;
}

}  // namespace detail

inline BinBetaChain binbeta_posterior_sampler(const CountDataset& data, const ChainConfig& cfg, double hyper_sd = 0.3) {
    return detail::binbeta_sampler<ExtremeDensityCache>(data, cfg, nullptr, hyper_sd);
}

template <class StatDensity>
BinBetaChain binbeta_partial_posterior_sampler(const CountDataset& data, const ChainConfig& cfg, StatDensity density,
                                               double hyper_sd = 0.3) {
    return detail::binbeta_sampler(data, cfg, &density, hyper_sd);
}

inline BinBetaChain binbeta_partial_posterior_sampler(const CountDataset& data, double t_obs, StatisticKind kind,
                                                      const ChainConfig& cfg, double hyper_sd = 0.3) {
    return binbeta_partial_posterior_sampler(data, cfg, ExtremeDensityCache(t_obs, extreme_of(kind)), hyper_sd);
}

namespace detail {
inline double rate_statistic(std::span<const double> rates, StatisticKind kind) {
    return extreme_value(rates, extreme_of(kind));
}

// theta draws (K x I, row-major) -> replicate rate statistics with exact binomial counts.
inline std::vector<double> replicate_rates(std::span<const double> theta, std::span<const double> n, StatisticKind kind,
                                           SeededStream& rng) {
    const std::size_t I = n.size();
    const std::size_t K = theta.size() / I;
    std::vector<double> r(I), out;
    out.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < I; ++i) {
            const double p = std::clamp(theta[k * I + i], 0.0, 1.0);
            r[i] = static_cast<double>(rng.binomial(static_cast<long>(n[i]), p)) / n[i];
        }
        out.push_back(rate_statistic(r, kind));
    }
    return out;
}

inline DensityFn rate_mixture(std::span<const double> theta, std::span<const double> n, StatisticKind kind,
                              std::size_t max_components) {
    const std::size_t I = n.size();
    const std::size_t K = theta.size() / I;
    const std::size_t stride = std::max<std::size_t>(1, K / std::max<std::size_t>(1, max_components));
    ExtremeMixture mix(I, extreme_of(kind));
    std::vector<double> v(I);
    for (std::size_t k = 0; k < K; k += stride) {
        const auto th = theta.subspan(k * I, I);
        for (std::size_t i = 0; i < I; ++i) v[i] = rate_variance(th[i], n[i]);
        mix.add(th, v);
    }
    return mix;
}
}  // namespace detail

struct RatePredictive {
    std::vector<double> draws;
    DensityFn density;
};

inline RatePredictive binbeta_predictive(const BinBetaChain& chain, StatisticKind kind, SeededStream& rng,
                                         std::size_t max_components = 2000) {
    if (chain.empty()) throw std::invalid_argument("empty chain");
    return {detail::replicate_rates(chain.theta, chain.sizes, kind, rng),
            detail::rate_mixture(chain.theta, chain.sizes, kind, max_components)};
}

// EB predictive: theta from Beta(a_hat, b_hat) (prior) or Beta(a_hat + y, b_hat + n - y) (posterior).
inline RatePredictive binbeta_eb_predictive(const CountDataset& data, const BetaHyper& h, bool posterior,
                                            StatisticKind kind, std::size_t M, SeededStream& rng,
                                            std::size_t max_components = 2000) {
    if (M == 0) throw std::invalid_argument("number of predictive draws must be positive");
    const std::size_t I = data.size();
    std::vector<double> n(I), theta(M * I);
    for (std::size_t i = 0; i < I; ++i) n[i] = static_cast<double>(data.group(i).n);
    for (std::size_t k = 0; k < M; ++k) {
        for (std::size_t i = 0; i < I; ++i) {
            const auto& g = data.group(i);
            theta[k * I + i] = posterior ? rng.beta(h.alpha + static_cast<double>(g.y), h.beta + static_cast<double>(g.n - g.y))
                                         : rng.beta(h.alpha, h.beta);
        }
    }
    return {detail::replicate_rates(theta, n, kind, rng), detail::rate_mixture(theta, n, kind, max_components)};
}

// Moment-matched normal comparison of group i's evidence N(y/n, r(1-r)/n)
// with the Beta(a, b) null density.
inline double binbeta_conflict_c(const CountGroup& g, const BetaHyper& h) {
    const double n = static_cast<double>(g.n);
    const double r = std::clamp(g.rate(), 0.5 / n, 1.0 - 0.5 / n);
    return ohagan_conflict_normal(g.rate(), std::sqrt(r * (1.0 - r) / n), h.mean(), std::sqrt(h.var()));
}

inline std::vector<double> binbeta_median_c(const BinBetaChain& chain, const CountDataset& data) {
    if (chain.empty()) throw std::invalid_argument("empty chain");
    std::vector<double> out(data.size()), c(chain.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t k = 0; k < chain.size(); ++k) c[k] = binbeta_conflict_c(data.group(i), {chain.alpha[k], chain.beta[k]});
        out[i] = sample_quantile(c, 0.5);
    }
    return out;
}

// Pr(theta_rep - theta_fix >= 0): theta_rep from the moment-matched normal of
// Beta(a, b) under the leave-one-out chain, theta_fix ~ N(y_i/n_i, r(1-r)/n_i).
inline PValue binbeta_conflict_pvalue(const BinBetaChain& loo, const CountGroup& g, SeededStream& rng) {
    if (loo.empty()) throw std::invalid_argument("empty chain");
    const double n = static_cast<double>(g.n);
    const double r = std::clamp(g.rate(), 0.5 / n, 1.0 - 0.5 / n);
    const double vfix = r * (1.0 - r) / n;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < loo.size(); ++k) {
        const BetaHyper h{loo.alpha[k], loo.beta[k]};
        const double rep = rng.normal(h.mean(), h.var());
        const double fix = rng.normal(g.rate(), vfix);
        hits += rep - fix >= 0.0;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(loo.size());
    return {p, binomial_se(p, loo.size())};
}

// Group order by increasing rate (ties keep input order).
inline std::vector<std::size_t> order_by_rate(const CountDataset& data) {
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return data.group(a).rate() < data.group(b).rate();
    });
    return idx;
}

}  // namespace hiercheck
