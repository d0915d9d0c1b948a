#pragma once

// Samplers for the normal-normal hierarchical model
//
//   X_ij | theta_i ~ N(theta_i, sigma^2_i),  theta_i | mu, tau^2 ~ N(mu, tau^2)
//
// under either the reference prior pi(mu, tau^2[, sigma^2]) ∝ 1/tau [* 1/sigma^2]
// or a proper conjugate-form prior. Three targets are provided:
//   * the posterior (plain Gibbs),
//   * the partial posterior pi(. | x) / f(t_obs | theta) for a max/min
//     statistic (Metropolis-within-Gibbs on theta, and on sigma^2 when unknown),
//   * the partial posterior for the grand mean with mu fixed (plain Gibbs).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hiercheck/dataset.hpp"
#include "hiercheck/distributions.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/normal.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck {

// Hyperprior for (mu, tau^2, sigma^2).
//   Reference: mu flat, pi(tau^2) ∝ 1/tau, pi(sigma^2) ∝ 1/sigma^2 (improper).
//   Proper:    mu ~ N(mu_mean, mu_var), tau^2 = tau_scale / Y, Y ~ chi^2_{tau_dof},
//              sigma^2 = sigma_scale / Y', Y' ~ chi^2_{sigma_dof}.
struct NormalPrior {
    enum class Kind { Reference, Proper };
    Kind kind = Kind::Reference;
    double mu_mean = 0.0, mu_var = 1.0;
    double tau_dof = 1.0, tau_scale = 1.0;
    double sigma_dof = 1.0, sigma_scale = 1.0;

    static NormalPrior reference() { return {}; }

    // mu ~ N(2, 10), sigma^2 ~ 22 W, tau^2 ~ 6 W with W ~ chi^-2_20. With
    // scaled_w, W is the scaled variant 20/Y; otherwise W = 1/Y.
    static NormalPrior ohagan(bool scaled_w = false) {
        NormalPrior p;
        p.kind = Kind::Proper;
        p.mu_mean = 2.0;
        p.mu_var = 10.0;
        const double w = scaled_w ? 20.0 : 1.0;
        p.tau_dof = 20.0;
        p.tau_scale = 6.0 * w;
        p.sigma_dof = 20.0;
        p.sigma_scale = 22.0 * w;
        return p;
    }

    bool proper() const { return kind == Kind::Proper; }
};

struct ChainConfig {
    std::size_t iterations = 40000;  // total sweeps, burn-in included
    std::size_t burn_in = 10000;
    std::size_t thinning = 1;
    std::uint64_t seed = 20070322;
    std::uint64_t stream = 0;
    std::optional<double> fixed_mu;  // hold mu at mu0 (mean tests)
    // Partial-posterior theta proposals.
    bool shift = true;               // move proposals toward the conditional-MLE estimate
    // Acceptance ratio for the shifted proposal. The default keeps, for each
    // theta_i, the unshifted draw that produced it and evaluates the reverse
    // move there, as in the original algorithm; with printed_acceptance = false
    // the mixture density of theta* + U*s is used instead.
    bool printed_acceptance = true;
    // Extra symmetric random-walk move per theta_i (sd = scale * sqrt(V_i));
    // 0 disables. The independence move alone sticks where the target has
    // heavier tails than the proposal.
    double random_walk_scale = 2.0;

    void use_exact_sampler() { printed_acceptance = false; }
    std::size_t zero_accept_window = 1000;
    int max_inflations = 3;

    void validate() const {
        if (!(iterations > burn_in)) throw config_error("chain iterations must exceed burn-in");
        if (thinning < 1) throw config_error("thinning must be at least 1");
    }
    std::size_t retained() const { return (iterations - burn_in) / thinning; }
    SeededStream make_stream() const { return SeededStream(seed, stream); }
};

// One retained draw viewed inside a ChainOutput.
struct ParamDraw {
    std::span<const double> theta;
    double mu;
    double tau2;
    double sigma2;  // 0 when sigma^2 is known per group
};

struct ChainOutput {
    std::string sampler;
    std::size_t groups = 0;
    bool sigma2_known = true;
    std::vector<double> known_mean_vars;  // sigma_i^2 / n_i when known
    std::vector<double> sizes;
    std::vector<double> theta;  // retained x groups, row-major
    std::vector<double> mu;
    std::vector<double> tau2;
    std::vector<double> sigma2;
    std::vector<double> theta_acceptance;  // per group, partial posterior only
    double sigma2_acceptance = 1.0;
    std::uint64_t seed = 0, stream = 0;
    std::size_t burn_in = 0, thinning = 1;

    std::size_t size() const { return mu.size(); }
    bool empty() const { return mu.empty(); }

    ParamDraw draw(std::size_t k) const {
        return {std::span(theta).subspan(k * groups, groups), mu[k], tau2[k], sigma2_known ? 0.0 : sigma2[k]};
    }

    // Sampling variances of the group means at draw k.
    void mean_vars(std::size_t k, std::vector<double>& out) const {
        out.resize(groups);
        for (std::size_t i = 0; i < groups; ++i) out[i] = sigma2_known ? known_mean_vars[i] : sigma2[k] / sizes[i];
    }
};

// theta_c: average of the group means with the most extreme one removed
// (the largest for a max statistic, the smallest for a min statistic).
inline double conditional_mle_shift(const GroupedDataset& data, Extreme e = Extreme::Max) {
    if (data.size() < 2) throw std::invalid_argument("conditional MLE shift needs at least two groups");
    auto m = data.means();
    std::sort(m.begin(), m.end());
    const auto first = e == Extreme::Max ? m.begin() : m.begin() + 1;
    const auto last = e == Extreme::Max ? m.end() - 1 : m.end();
    return std::accumulate(first, last, 0.0) / static_cast<double>(m.size() - 1);
}

namespace detail {

// Shared full conditionals of the normal-normal posterior.
class NormalKernel {
public:
    NormalKernel(const GroupedDataset& data, bool sigma2_known, const NormalPrior& prior)
        : prior_(prior), sigma2_known_(sigma2_known), means_(data.means()), sizes_(data.sizes()) {
        I_ = means_.size();
        if (sigma2_known) {
            known_vars_ = data.mean_variances();
        } else {
            if (!data.has_observations()) {
                throw data_error("unknown sigma^2 requires raw observations");
            }
            within_ = data.within_ss();
            total_n_ = data.total_size();
        }
    }

    std::size_t groups() const { return I_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& sizes() const { return sizes_; }
    const std::vector<double>& known_vars() const { return known_vars_; }
    bool sigma2_known() const { return sigma2_known_; }

    double mean_var(std::size_t i, double sigma2) const {
        return sigma2_known_ ? known_vars_[i] : sigma2 / sizes_[i];
    }

    void mean_vars(double sigma2, std::vector<double>& out) const {
        out.resize(I_);
        for (std::size_t i = 0; i < I_; ++i) out[i] = mean_var(i, sigma2);
    }

    double draw_mu(std::span<const double> theta, double tau2, SeededStream& rng) const {
        const double sum = std::accumulate(theta.begin(), theta.end(), 0.0);
        if (prior_.proper()) {
            const double prec = static_cast<double>(I_) / tau2 + 1.0 / prior_.mu_var;
            return rng.normal((sum / tau2 + prior_.mu_mean / prior_.mu_var) / prec, 1.0 / prec);
        }
        return rng.normal(sum / static_cast<double>(I_), tau2 / static_cast<double>(I_));
    }

    double draw_tau2(std::span<const double> theta, double mu, SeededStream& rng) const {
        double s = 0.0;
        for (double t : theta) s += (t - mu) * (t - mu);
        if (prior_.proper()) {
            const double dof = prior_.tau_dof + static_cast<double>(I_);
            return (prior_.tau_scale + s) / rng.chisq(dof);
        }
        // chi^-2(I-1, s/(I-1)); a zero scale (all theta_i == mu) is floored
        const double dof = static_cast<double>(I_) - 1.0;
        return sample_scaled_inv_chisq(dof, std::max(s, 1e-12) / dof, rng);
    }

    // Posterior conditional N(E_i, V_i) of theta_i.
    std::pair<double, double> theta_moments(std::size_t i, double mu, double tau2, double sigma2) const {
        const double v = mean_var(i, sigma2);
        const double prec = 1.0 / v + 1.0 / tau2;
        return {(means_[i] / v + mu / tau2) / prec, 1.0 / prec};
    }

    // sigma^2 | theta full conditional: chi^-2(m, SS/m) under the reference prior.
    double draw_sigma2(std::span<const double> theta, SeededStream& rng) const {
        double ss = 0.0;
        for (std::size_t i = 0; i < I_; ++i) ss += within_[i] + sizes_[i] * (means_[i] - theta[i]) * (means_[i] - theta[i]);
        if (prior_.proper()) {
            return (prior_.sigma_scale + ss) / rng.chisq(prior_.sigma_dof + total_n_);
        }
        return sample_scaled_inv_chisq(total_n_, ss / total_n_, rng);
    }

    double initial_sigma2() const {
        if (sigma2_known_) return 0.0;
        return std::accumulate(within_.begin(), within_.end(), 0.0) / total_n_;
    }

    double initial_tau2() const {
        const double m = std::accumulate(means_.begin(), means_.end(), 0.0) / static_cast<double>(I_);
        double s = 0.0;
        for (double x : means_) s += (x - m) * (x - m);
        return (I_ > 1 ? s / static_cast<double>(I_ - 1) : 0.0) + 1e-6;
    }

    double initial_mu() const {
        return std::accumulate(means_.begin(), means_.end(), 0.0) / static_cast<double>(I_);
    }

    ChainOutput make_output(std::string label, const ChainConfig& cfg) const {
        ChainOutput out;
        out.sampler = std::move(label);
        out.groups = I_;
        out.sigma2_known = sigma2_known_;
        out.known_mean_vars = known_vars_;
        out.sizes = sizes_;
        out.seed = cfg.seed;
        out.stream = cfg.stream;
        out.burn_in = cfg.burn_in;
        out.thinning = cfg.thinning;
        const std::size_t R = cfg.retained();
        out.theta.reserve(R * I_);
        out.mu.reserve(R);
        out.tau2.reserve(R);
        if (!sigma2_known_) out.sigma2.reserve(R);
        return out;
    }

private:
    NormalPrior prior_;
    bool sigma2_known_;
    std::vector<double> means_;
    std::vector<double> sizes_;
    std::vector<double> known_vars_;
    std::vector<double> within_;
    double total_n_ = 0.0;
    std::size_t I_ = 0;
};

inline void require_groups(const GroupedDataset& data, const NormalPrior& prior) {
    if (!prior.proper() && data.size() < 2) {
        throw data_error("the reference prior needs at least two groups for a proper tau^2 conditional");
    }
}

inline void record(ChainOutput& out, std::span<const double> theta, double mu, double tau2, double sigma2) {
    out.theta.insert(out.theta.end(), theta.begin(), theta.end());
    out.mu.push_back(mu);
    out.tau2.push_back(tau2);
    if (!out.sigma2_known) out.sigma2.push_back(sigma2);
}

inline bool keep(const ChainConfig& cfg, std::size_t it) {
    return it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thinning == 0;
}

}  // namespace detail

// Gibbs sampler for the joint posterior of (theta, mu, tau^2[, sigma^2]).
inline ChainOutput gibbs_posterior(const GroupedDataset& data, const ChainConfig& cfg, bool sigma2_known,
                                   const NormalPrior& prior = NormalPrior::reference()) {
    cfg.validate();
    detail::require_groups(data, prior);
    const detail::NormalKernel K(data, sigma2_known, prior);
    auto rng = cfg.make_stream();
    const std::size_t I = K.groups();

    std::vector<double> theta = K.means();
    double mu = cfg.fixed_mu.value_or(K.initial_mu());
    double tau2 = K.initial_tau2();
    double sigma2 = K.initial_sigma2();

    auto out = K.make_output(cfg.fixed_mu ? "gibbs-posterior-fixed-mu" : "gibbs-posterior", cfg);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (!cfg.fixed_mu) mu = K.draw_mu(theta, tau2, rng);
        tau2 = K.draw_tau2(theta, mu, rng);
        for (std::size_t i = 0; i < I; ++i) {
            const auto [E, V] = K.theta_moments(i, mu, tau2, sigma2);
            theta[i] = rng.normal(E, V);
        }
        if (!sigma2_known) sigma2 = K.draw_sigma2(theta, rng);
        if (detail::keep(cfg, it)) detail::record(out, theta, mu, tau2, sigma2);
    }
    return out;
}

// Log-density of the checking statistic used by the partial-posterior sampler.
// ExtremeDensityCache is the production model; tests may inject others with
// the same interface (e.g. a constant).
struct ConstantStatDensity {
    void reset(std::span<const double>, std::span<const double>) {}
    double log_density() const { return 0.0; }
    double log_density_with(std::size_t, double, double) { return 0.0; }
    void accept() {}
};

namespace detail {

// log of the uniform-shift proposal density: theta* ~ N(E, S), x = theta* + U*s,
// U ~ Uniform(0,1), so q(x) = [Phi((x-E)/sd) - Phi((x-E-s)/sd)] / s.
inline double log_shift_proposal(double x, double E, double S, double s) {
    const double sd = std::sqrt(S);
    if (std::fabs(s) < 1e-9 * sd) return normal::log_pdf(x, E, S);
    const double a = (x - E) / sd, b = (x - E - s) / sd;
    return s > 0.0 ? normal::std_log_cdf_diff(a, b) - std::log(s) : normal::std_log_cdf_diff(b, a) - std::log(-s);
}

}  // namespace detail

// Metropolis-within-Gibbs sampler for the partial posterior
//   pi(theta, mu, tau^2[, sigma^2] | x) / f(t_obs | theta[, sigma^2])
// of an order statistic. mu and tau^2 keep their posterior conditionals.
// Each theta_i is proposed from its posterior conditional N(E_i, V_i) moved by
// U * (theta_c - xbar_i); sigma^2 (when unknown) by an independence step from
// its posterior conditional.
template <class StatDensity>
ChainOutput partial_posterior_sampler(const GroupedDataset& data, [[maybe_unused]] double t_obs, Extreme e, const ChainConfig& cfg,
                                      bool sigma2_known, StatDensity density,
                                      const NormalPrior& prior = NormalPrior::reference()) {
    cfg.validate();
    detail::require_groups(data, prior);
    const detail::NormalKernel K(data, sigma2_known, prior);
    auto rng = cfg.make_stream();
    const std::size_t I = K.groups();

    std::vector<double> shift(I, 0.0);
    if (cfg.shift && I >= 2) {
        const double theta_c = conditional_mle_shift(data, e);
        for (std::size_t i = 0; i < I; ++i) shift[i] = theta_c - K.means()[i];
    }

    std::vector<double> theta = K.means();
    // Unshifted pre-image of each current theta_i (theta_i = pre_i + U * shift_i).
    std::vector<double> pre = theta;
    double mu = cfg.fixed_mu.value_or(K.initial_mu());
    double tau2 = K.initial_tau2();
    double sigma2 = K.initial_sigma2();
    std::vector<double> vars;
    K.mean_vars(sigma2, vars);
    density.reset(theta, vars);
    if (!std::isfinite(density.log_density())) {
        throw sampler_abort("statistic density is not finite at the initial state");
    }

    std::vector<double> inflation(I, 1.0);
    std::vector<int> inflations(I, 0);
    std::vector<std::size_t> window_acc(I, 0), total_acc(I, 0), kept_acc(I, 0);
    std::size_t sigma_acc = 0, kept_sweeps = 0;
    std::vector<double> prop_vars;

    auto out = K.make_output("partial-posterior", cfg);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        if (!cfg.fixed_mu) mu = K.draw_mu(theta, tau2, rng);
        tau2 = K.draw_tau2(theta, mu, rng);

        const bool counting = it >= cfg.burn_in;
        for (std::size_t i = 0; i < I; ++i) {
            const auto [E, V] = K.theta_moments(i, mu, tau2, sigma2);
            const double S = V * inflation[i];
            const double star = rng.normal(E, S);
            const double u = cfg.shift ? rng.uniform() : 0.0;
            const double x = star + u * shift[i];
            const double cur = theta[i];

            const double log_f_cur = density.log_density();
            const double log_f_new = density.log_density_with(i, x, vars[i]);
            double log_alpha;
            if (cfg.printed_acceptance) {
                log_alpha = normal::log_pdf(x, E, V) - normal::log_pdf(cur, E, V) + normal::log_pdf(pre[i], E, S) -
                            normal::log_pdf(star, E, S) + log_f_cur - log_f_new;
            } else {
                log_alpha = normal::log_pdf(x, E, V) - normal::log_pdf(cur, E, V) +
                            detail::log_shift_proposal(cur, E, S, shift[i]) -
                            detail::log_shift_proposal(x, E, S, shift[i]) + log_f_cur - log_f_new;
            }
            if (std::isnan(log_alpha)) log_alpha = -std::numeric_limits<double>::infinity();
            if (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha) {
                theta[i] = x;
                pre[i] = star;
                density.accept();
                ++window_acc[i];
                ++total_acc[i];
                if (counting) ++kept_acc[i];
            }
            if (cfg.random_walk_scale > 0.0) {
                // symmetric local move; lets the chain leave states the
                // independence proposal rarely reaches
                const double c0 = theta[i];
                const double y = c0 + cfg.random_walk_scale * std::sqrt(V) * rng.normal();
                const double lf0 = density.log_density();
                const double lf1 = density.log_density_with(i, y, vars[i]);
                double la = normal::log_pdf(y, E, V) - normal::log_pdf(c0, E, V) + lf0 - lf1;
                if (std::isnan(la)) la = -std::numeric_limits<double>::infinity();
                if (la >= 0.0 || std::log(rng.uniform()) < la) {
                    theta[i] = y;
                    pre[i] += y - c0;
                    density.accept();
                    ++window_acc[i];
                }
            }
        }

        if (!sigma2_known) {
            const double prop = K.draw_sigma2(theta, rng);
            K.mean_vars(prop, prop_vars);
            StatDensity trial = density;
            trial.reset(theta, prop_vars);
            const double log_alpha = density.log_density() - trial.log_density();
            if (!std::isnan(log_alpha) && (log_alpha >= 0.0 || std::log(rng.uniform()) < log_alpha)) {
                sigma2 = prop;
                vars = prop_vars;
                density = std::move(trial);
                if (counting) ++sigma_acc;
            }
        }
        if (counting) ++kept_sweeps;

        if ((it + 1) % cfg.zero_accept_window == 0) {
            for (std::size_t i = 0; i < I; ++i) {
                if (window_acc[i] == 0) {
                    if (inflations[i] >= cfg.max_inflations) {
                        throw sampler_abort("partial-posterior sampler: no theta_" + std::to_string(i + 1) +
                                            " proposal accepted in " + std::to_string(cfg.zero_accept_window) +
                                            " sweeps after " + std::to_string(cfg.max_inflations) +
                                            " proposal inflations (t_obs is extremely surprising)");
                    }
                    inflation[i] *= 4.0;
                    ++inflations[i];
                }
                window_acc[i] = 0;
            }
        }
        if (detail::keep(cfg, it)) detail::record(out, theta, mu, tau2, sigma2);
    }

    out.theta_acceptance.resize(I);
    for (std::size_t i = 0; i < I; ++i) {
        out.theta_acceptance[i] = kept_sweeps ? static_cast<double>(kept_acc[i]) / static_cast<double>(kept_sweeps) : 0.0;
    }
    out.sigma2_acceptance = sigma2_known || kept_sweeps == 0
                                ? 1.0
                                : static_cast<double>(sigma_acc) / static_cast<double>(kept_sweeps);
    return out;
}

inline ChainOutput partial_posterior_sampler(const GroupedDataset& data, double t_obs, Extreme e,
                                             const ChainConfig& cfg, bool sigma2_known,
                                             const NormalPrior& prior = NormalPrior::reference()) {
    return partial_posterior_sampler(data, t_obs, e, cfg, sigma2_known, ExtremeDensityCache(t_obs, e), prior);
}

// Conditional moments (E_i^0, V_i^0) of theta_i under the partial posterior
// for the grand-mean statistic with mu = mu0.
struct MeanTestMoments {
    double mean;
    double var;
};

inline MeanTestMoments mean_test_theta_moments(std::size_t i, std::span<const double> theta, double tau2, double mu0,
                                               double t_obs, std::span<const double> means,
                                               std::span<const double> sizes, std::span<const double> s2) {
    double N = 0.0, S = 0.0, others = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
        N += sizes[j];
        S += sizes[j] * s2[j];
        if (j != i) others += sizes[j] * theta[j];
    }
    const double a = sizes[i] / s2[i];
    const double inv_v = a * (1.0 - sizes[i] * s2[i] / S) + 1.0 / tau2;
    const double var = 1.0 / inv_v;
    const double mean = var * (a * (means[i] - s2[i] / S * (N * t_obs - others)) + mu0 / tau2);
    return {mean, var};
}

// Gibbs sampler for the partial posterior of (theta, tau^2) given mu = mu0
// when the statistic is the weighted grand mean.
inline ChainOutput partial_posterior_mean_test(const GroupedDataset& data, double mu0, double t_obs,
                                               const ChainConfig& cfg) {
    cfg.validate();
    if (data.size() < 2) throw data_error("mean-test partial posterior needs at least two groups");
    const detail::NormalKernel K(data, true, NormalPrior::reference());
    auto rng = cfg.make_stream();
    const std::size_t I = K.groups();
    const auto s2 = data.variances();
    const auto& means = K.means();
    const auto& sizes = K.sizes();

    std::vector<double> theta = means;
    double tau2 = K.initial_tau2();
    auto out = K.make_output("partial-posterior-mean-test", cfg);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        tau2 = K.draw_tau2(theta, mu0, rng);
        for (std::size_t i = 0; i < I; ++i) {
            auto m = mean_test_theta_moments(i, theta, tau2, mu0, t_obs, means, sizes, s2);
            if (!(m.var > 0.0) || !std::isfinite(m.var)) {
                throw std::logic_error("mean-test partial posterior: nonpositive conditional variance");
            }
            theta[i] = rng.normal(m.mean, m.var);
        }
        if (detail::keep(cfg, it)) detail::record(out, theta, mu0, tau2, 0.0);
    }
    return out;
}

// Replicate statistics: one T(xrep) per retained draw, xrep_i ~ N(theta_i, v_i).
inline std::vector<double> sample_predictive(const ChainOutput& chain, const GroupedDataset& data, StatisticKind kind,
                                             SeededStream& rng) {
    if (chain.empty()) throw std::invalid_argument("empty chain");
    const auto n = data.sizes();
    std::vector<double> xbar(chain.groups), v, out;
    out.reserve(chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const auto d = chain.draw(k);
        chain.mean_vars(k, v);
        for (std::size_t i = 0; i < chain.groups; ++i) xbar[i] = rng.normal(d.theta[i], v[i]);
        switch (kind) {
            case StatisticKind::MaxGroupMean: out.push_back(extreme_value(xbar, Extreme::Max)); break;
            case StatisticKind::MinGroupMean: out.push_back(extreme_value(xbar, Extreme::Min)); break;
            case StatisticKind::GrandMean: out.push_back(weighted_grand_mean(xbar, n)); break;
            default: throw config_error("statistic '" + to_string(kind) + "' has no replicate form here");
        }
    }
    return out;
}

// Rao-Blackwellised predictive density of T from at most max_components
// evenly spaced retained draws.
inline DensityFn predictive_density(const ChainOutput& chain, const GroupedDataset& data, StatisticKind kind,
                                    std::size_t max_components = 2000) {
    if (chain.empty()) throw std::invalid_argument("empty chain");
    const std::size_t K = chain.size();
    const std::size_t stride = std::max<std::size_t>(1, K / std::max<std::size_t>(1, max_components));
    std::vector<double> v;
    if (kind == StatisticKind::GrandMean) {
        const auto n = data.sizes();
        NormalMixture mix;
        for (std::size_t k = 0; k < K; k += stride) {
            chain.mean_vars(k, v);
            double N = 0.0, m = 0.0, vv = 0.0;
            const auto d = chain.draw(k);
            for (std::size_t i = 0; i < chain.groups; ++i) {
                N += n[i];
                m += n[i] * d.theta[i];
                vv += n[i] * n[i] * v[i];
            }
            mix.add(m / N, vv / (N * N));
        }
        return mix;
    }
    ExtremeMixture mix(chain.groups, extreme_of(kind));
    for (std::size_t k = 0; k < K; k += stride) {
        chain.mean_vars(k, v);
        mix.add(chain.draw(k).theta, v);
    }
    return mix;
}

// Long-format dump: iteration, parameter, value.
inline void write_chain_csv(std::ostream& os, const ChainOutput& chain) {
    os << "draw,parameter,value\n";
    os.precision(17);
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const auto d = chain.draw(k);
        for (std::size_t i = 0; i < chain.groups; ++i) os << k << ",theta_" << (i + 1) << ',' << d.theta[i] << '\n';
        os << k << ",mu," << d.mu << '\n';
        os << k << ",tau2," << d.tau2 << '\n';
        if (!chain.sigma2_known) os << k << ",sigma2," << d.sigma2 << '\n';
    }
}

}  // namespace hiercheck
