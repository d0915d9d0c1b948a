#pragma once

// The computations behind the experiments, kept free of config parsing and
// report formatting so tests can call them directly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hiercheck/binbeta.hpp"
#include "hiercheck/dataset.hpp"
#include "hiercheck/eb.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/parallel.hpp"
#include "hiercheck/statistics.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck::harness {

struct CheckOptions {
    StatisticKind kind = StatisticKind::MaxGroupMean;
    std::vector<Construction> constructions{Construction::EBPrior, Construction::EBPost, Construction::Posterior,
                                            Construction::PartialPosterior};
    double mu0 = 0.0;  // GrandMean only
    ChainConfig chain;
    std::size_t eb_draws = 100000;
    NormalPrior prior = NormalPrior::reference();
};

struct ConstructionResult {
    SurpriseReport report;
    DensityFn density;  // predictive density of T
    Interval range{0.0, 0.0};
    double min_theta_acceptance = 1.0;  // partial posterior only
    double sigma2_acceptance = 1.0;
};

namespace detail {

inline std::uint64_t construction_stream(const ChainConfig& c, Construction k) {
    return c.stream + static_cast<std::uint64_t>(k);
}

inline double min_of(const std::vector<double>& v) {
    return v.empty() ? 1.0 : *std::min_element(v.begin(), v.end());
}

}  // namespace detail

// One construction on one dataset. Group variances may be known per group or
// (with raw observations) a common unknown sigma^2; EB constructions then plug
// in the pooled MLE.
inline ConstructionResult check_construction(const GroupedDataset& data, Construction which, const CheckOptions& o) {
    const StatisticKind kind = o.kind;
    if (kind != StatisticKind::MaxGroupMean && kind != StatisticKind::MinGroupMean && kind != StatisticKind::GrandMean)
        throw config_error("statistic '" + to_string(kind) + "' is not available for grouped normal data");
    const bool known = data.has_known_variances();
    const bool mean_test = kind == StatisticKind::GrandMean;
    const double t = compute_statistic(data, kind);

    ChainConfig cfg = o.chain;
    cfg.stream = detail::construction_stream(o.chain, which);
    if (mean_test) cfg.fixed_mu = o.mu0;
    auto rng = cfg.make_stream().derive(7);

    ConstructionResult r;
    r.report.construction = which;
    r.report.t_obs = t;

    auto finish_mc = [&](const std::vector<double>& draws, DensityFn h) {
        const PValue p = mean_test ? two_sided_p(draws, t, o.mu0) : p_value_mc(draws, t, tail_of(kind));
        r.report.p = p.p;
        r.report.p_se = p.se;
        r.report.draws = draws.size();
        r.range = search_interval(draws);
        r.report.rps = rps_rao_blackwell(h, t, r.range);
        r.density = std::move(h);
    };

    switch (which) {
        case Construction::EBPrior:
        case Construction::EBPost: {
            const bool post = which == Construction::EBPost;
            const auto eb_data = with_plugin_variance(data);
            if (mean_test) {
                const auto cf = eb_mean_test_closed_form(eb_data, o.mu0, t);
                const double e = post ? cf.e_post : cf.e_prior, v = post ? cf.v_post : cf.v_prior;
                r.report.p = post ? cf.p_post : cf.p_prior;
                r.report.rps = post ? cf.rps_post : cf.rps_prior;
                r.report.p_se = 0.0;
                r.report.draws = 0;
                r.density = [e, v](double x) { return normal::pdf(x, e, v); };
                r.range = {e - 8.0 * std::sqrt(v), e + 8.0 * std::sqrt(v)};
                break;
            }
            const auto fit = fit_mle(eb_data);
            const auto draws = post ? sample_eb_post_pred(fit, eb_data, kind, o.eb_draws, rng)
                                    : sample_eb_prior_pred(fit, eb_data, kind, o.eb_draws, rng);
            finish_mc(draws, eb_predictive_density(fit, eb_data, kind, post));
            break;
        }
        case Construction::Posterior: {
            const auto chain = gibbs_posterior(data, cfg, known, o.prior);
            finish_mc(sample_predictive(chain, data, kind, rng), predictive_density(chain, data, kind));
            break;
        }
        case Construction::PartialPosterior: {
            if (mean_test) {
                const auto d = with_plugin_variance(data);
                const auto chain = partial_posterior_mean_test(d, o.mu0, t, cfg);
                finish_mc(sample_predictive(chain, d, kind, rng), predictive_density(chain, d, kind));
                break;
            }
            const auto chain = partial_posterior_sampler(data, t, extreme_of(kind), cfg, known, o.prior);
            r.min_theta_acceptance = detail::min_of(chain.theta_acceptance);
            r.sigma2_acceptance = chain.sigma2_acceptance;
            finish_mc(sample_predictive(chain, data, kind, rng), predictive_density(chain, data, kind));
            break;
        }
        default:
            throw config_error("construction '" + to_string(which) +
                               "' is a per-group diagnostic; use the conflict suite");
    }
    return r;
}

inline std::vector<ConstructionResult> run_surprise_check(const GroupedDataset& data, const CheckOptions& o) {
    std::vector<ConstructionResult> out;
    for (auto c : o.constructions) out.push_back(check_construction(data, c, o));
    return out;
}

// ---------------------------------------------------------------------------
// Replicate studies (T = max group mean, known sigma^2).

struct StudyP {
    double p = 1.0;
    double se = 0.0;
    std::size_t draws = 0;
    bool aborted = false;
};

// Rao-Blackwellised tail probability: the average over retained draws of
// Pr(T >= t | theta, v), with the naive (independent-draw) standard error.
inline StudyP rao_blackwell_tail(const ChainOutput& chain, double t, Extreme e) {
    std::vector<double> v;
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < chain.size(); ++k) {
        chain.mean_vars(k, v);
        const double q = extreme_tail_prob(t, chain.draw(k).theta, v, e);
        s += q;
        s2 += q * q;
    }
    const double K = static_cast<double>(chain.size());
    const double m = s / K;
    return {m, std::sqrt(std::max(0.0, s2 / K - m * m) / K), chain.size(), false};
}

// Replicate-level streams: the dataset comes from derive(1), construction k
// from derive(2 + k). The key identifies the study block (group count,
// alternative) so results do not depend on the order blocks are listed in.
inline SeededStream replicate_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t block, std::uint64_t r) {
    return SeededStream(seed, stream).derive((block << 32) | r);
}

inline StudyP study_pvalue(const GroupedDataset& x, Construction which, const ChainConfig& base,
                           const SeededStream& rep) {
    const Extreme e = Extreme::Max;
    const double t = compute_statistic(x, StatisticKind::MaxGroupMean);
    ChainConfig cfg = base;
    cfg.stream = rep.derive(2 + static_cast<std::uint64_t>(which)).stream_id();
    switch (which) {
        case Construction::EBPrior:
        case Construction::EBPost: {
            const auto fit = fit_mle(x);
            const auto v = x.mean_variances();
            std::vector<double> centre(x.size(), fit.mu), var(x.size());
            const auto mom = eb_posterior_moments(fit, x);
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (which == Construction::EBPost) centre[i] = mom.mean[i];
                var[i] = v[i] + (which == Construction::EBPost ? mom.var[i] : fit.tau2);
            }
            return {extreme_tail_prob(t, centre, var, e), 0.0, 0, false};
        }
        case Construction::Posterior:
            return rao_blackwell_tail(gibbs_posterior(x, cfg, true), t, e);
        case Construction::PartialPosterior:
            try {
                return rao_blackwell_tail(partial_posterior_sampler(x, t, e, cfg, true), t, e);
            } catch (const sampler_abort&) {
                // f_T(t_obs) numerically zero at every proposal: extreme surprise.
                return {0.0, 0.0, 0, true};
            }
        default:
            throw config_error("construction '" + to_string(which) + "' is not available in replicate studies");
    }
}

// Group means of one simulated dataset: theta_i from `draw_theta`, then
// xbar_i ~ N(theta_i, sigma2 / n).
template <class ThetaFn>
GroupedDataset simulate_means(std::size_t I, std::size_t n, double sigma2, ThetaFn draw_theta, SeededStream& rng) {
    std::vector<double> xbar(I);
    for (auto& x : xbar) {
        const double theta = draw_theta(rng);
        x = rng.normal(theta, sigma2 / static_cast<double>(n));
    }
    return GroupedDataset::from_means(xbar, n, sigma2);
}

// Kolmogorov-Smirnov distance between a sample and U(0, 1).
inline double ks_uniform(std::vector<double> p) {
    if (p.empty()) return 0.0;
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double u = std::clamp(p[i], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
    }
    return d;
}

// Counts over `bins` equal bins of [0, 1]; p = 1 goes in the last bin.
inline std::vector<std::size_t> histogram01(const std::vector<double>& p, std::size_t bins) {
    std::vector<std::size_t> h(bins, 0);
    for (double x : p) {
        const auto b = static_cast<std::size_t>(std::clamp(x, 0.0, 1.0) * static_cast<double>(bins));
        ++h[std::min(b, bins - 1)];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Binomial-beta suite.

struct RateCheck {
    StatisticKind kind = StatisticKind::MaxRate;
    std::vector<SurpriseReport> reports;  // EB prior, EB post, posterior, partial posterior
};

struct BinBetaOptions {
    ChainConfig chain;
    std::size_t eb_draws = 20000;
    double hyper_sd = 0.3;
    bool rps = true;
    std::vector<StatisticKind> kinds{StatisticKind::MaxRate, StatisticKind::MinRate};
};

inline std::vector<RateCheck> binbeta_check(const CountDataset& data, const BinBetaOptions& o) {
    const auto fit = betabinom_fit_mle(data);
    ChainConfig post_cfg = o.chain;
    post_cfg.stream = detail::construction_stream(o.chain, Construction::Posterior);
    const auto post = binbeta_posterior_sampler(data, post_cfg, o.hyper_sd);

    std::vector<RateCheck> out;
    for (std::size_t s = 0; s < o.kinds.size(); ++s) {
        const StatisticKind kind = o.kinds[s];
        const double t = compute_statistic(data, kind);
        RateCheck rc;
        rc.kind = kind;
        auto add = [&](Construction c, const RatePredictive& pred) {
            const auto p = p_value_mc(pred.draws, t, tail_of(kind));
            SurpriseReport r;
            r.construction = c;
            r.p = p.p;
            r.p_se = p.se;
            r.draws = pred.draws.size();
            r.t_obs = t;
            if (o.rps) r.rps = rps_rao_blackwell(pred.density, t, search_interval(pred.draws));
            rc.reports.push_back(r);
        };
        const std::size_t mix = o.rps ? 2000 : 1;
        for (auto c : {Construction::EBPrior, Construction::EBPost}) {
            auto rng = SeededStream(o.chain.seed, detail::construction_stream(o.chain, c)).derive(7 + s);
            add(c, binbeta_eb_predictive(data, fit.hyper, c == Construction::EBPost, kind, o.eb_draws, rng, mix));
        }
        {
            auto rng = post_cfg.make_stream().derive(7 + s);
            add(Construction::Posterior, binbeta_predictive(post, kind, rng, mix));
        }
        {
            ChainConfig cfg = o.chain;
            cfg.stream = detail::construction_stream(o.chain, Construction::PartialPosterior) + 16 * s;
            const auto ppp = binbeta_partial_posterior_sampler(data, t, kind, cfg, o.hyper_sd);
            auto rng = cfg.make_stream().derive(7);
            add(Construction::PartialPosterior, binbeta_predictive(ppp, kind, rng, mix));
        }
        out.push_back(std::move(rc));
    }
    return out;
}

struct RateConflict {
    std::size_t group = 0;
    std::string label;
    long n = 0, y = 0;
    double c_median = 0.0;
    double p_con = 1.0, p_con_se = 0.0;
};

// Per-group c medians (full-data chain) and conflict p-values (leave-one-out
// chains, group i on stream + 1 + i), in input order.
inline std::vector<RateConflict> binbeta_conflicts(const CountDataset& data, const BinBetaOptions& o,
                                                   std::size_t workers = 1) {
    if (data.size() < 3) throw data_error("leave-one-out checks need at least three groups");
    const auto full = binbeta_posterior_sampler(data, o.chain, o.hyper_sd);
    const auto c = binbeta_median_c(full, data);
    std::vector<RateConflict> out(data.size());
    parallel_for(data.size(), workers, [&](std::size_t i) {
        ChainConfig ci = o.chain;
        ci.stream = o.chain.stream + 1 + i;
        const auto loo = binbeta_posterior_sampler(data.without_group(i), ci, o.hyper_sd);
        auto rng = ci.make_stream().derive(11);
        const auto& g = data.group(i);
        const auto p = binbeta_conflict_pvalue(loo, g, rng);
        out[i] = {i, g.label, g.n, g.y, c[i], p.p, p.se};
    });
    return out;
}

inline CountDataset simulate_counts(std::size_t I, long n, double a, double b, SeededStream& rng) {
    std::vector<CountGroup> gs;
    for (std::size_t i = 0; i < I; ++i) {
        const double theta = rng.beta(a, b);
        gs.push_back({std::to_string(i + 1), n, rng.binomial(n, theta)});
    }
    return CountDataset(std::move(gs));
}

}  // namespace hiercheck::harness
