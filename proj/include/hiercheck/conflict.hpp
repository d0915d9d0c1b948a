#pragma once

// Competing second-level checks: a simulation-based Monte Carlo test on
// posterior quantiles of a discrepancy, O'Hagan's node-conflict measure, and
// leave-one-out conflict / cross-validation p-values.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiercheck/dataset.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/mcmc.hpp"
#include "hiercheck/parallel.hpp"
#include "hiercheck/rng.hpp"
#include "hiercheck/surprise.hpp"

namespace hiercheck {

// Linear-interpolation sample quantile (R type 7). Sorts a copy.
inline double sample_quantile(std::vector<double> xs, double prob) {
    if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile probability outside [0, 1]");
    std::sort(xs.begin(), xs.end());
    const double h = (static_cast<double>(xs.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct QuantileVector {
    static constexpr std::array<double, 5> probs{0.05, 0.25, 0.5, 0.75, 0.95};
    std::array<double, 5> q{};

    static QuantileVector of(const std::vector<double>& draws) {
        if (draws.empty()) throw std::invalid_argument("quantile vector of an empty sample");
        auto s = draws;
        std::sort(s.begin(), s.end());
        QuantileVector v;
        const double last = static_cast<double>(s.size()) - 1.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double h = last * probs[k];
            const auto lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, s.size() - 1);
            v.q[k] = s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
        }
        return v;
    }

    bool monotone() const { return std::is_sorted(q.begin(), q.end()); }
};

inline double euclidean_distance(const QuantileVector& a, const QuantileVector& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.q.size(); ++k) s += (a.q[k] - b.q[k]) * (a.q[k] - b.q[k]);
    return std::sqrt(s);
}

// Discrepancies for the simulation-based check.
enum class Discrepancy { MaxGroupMean, MaxAbsDeviation };

inline std::string to_string(Discrepancy d) {
    return d == Discrepancy::MaxGroupMean ? "max-group-mean" : "max-abs-deviation";
}

inline Discrepancy parse_discrepancy(const std::string& s) {
    if (s == "max-group-mean" || s == "max" || s == "T1") return Discrepancy::MaxGroupMean;
    if (s == "max-abs-deviation" || s == "T2") return Discrepancy::MaxAbsDeviation;
    throw config_error("unknown discrepancy '" + s + "'");
}

// One dataset from the prior predictive of the normal-normal model under a
// proper prior, with the same group sizes as `shape`.
inline GroupedDataset draw_prior_predictive(const GroupedDataset& shape, const NormalPrior& prior, SeededStream& rng) {
    if (!prior.proper()) throw config_error("prior-predictive simulation needs a proper prior");
    const double mu = rng.normal(prior.mu_mean, prior.mu_var);
    const double tau2 = prior.tau_scale / rng.chisq(prior.tau_dof);
    const double sigma2 = prior.sigma_scale / rng.chisq(prior.sigma_dof);
    std::vector<std::vector<double>> obs(shape.size());
    for (std::size_t i = 0; i < shape.size(); ++i) {
        const double theta = rng.normal(mu, tau2);
        obs[i].resize(shape.group(i).n);
        for (auto& x : obs[i]) x = rng.normal(theta, sigma2);
    }
    return GroupedDataset::from_observations(obs);
}

// Posterior quantiles of the discrepancy given one dataset. max xbar does not
// depend on the parameters, so its posterior is a point mass.
inline QuantileVector discrepancy_quantiles(const GroupedDataset& data, Discrepancy d, const NormalPrior& prior,
                                            const ChainConfig& cfg) {
    if (d == Discrepancy::MaxGroupMean) {
        QuantileVector v;
        v.q.fill(compute_statistic(data, StatisticKind::MaxGroupMean));
        return v;
    }
    const auto chain = gibbs_posterior(data, cfg, data.has_known_variances(), prior);
    std::vector<double> draws(chain.size());
    for (std::size_t k = 0; k < chain.size(); ++k) {
        const auto p = chain.draw(k);
        draws[k] = max_abs_deviation(p.theta, p.mu);
    }
    return QuantileVector::of(draws);
}

struct SimCheckResult {
    Discrepancy discrepancy = Discrepancy::MaxAbsDeviation;
    double distance_obs = 0.0;
    double distance_q95 = 0.0;
    bool reject = false;
    std::vector<double> distances;  // index 0 is the observed data
};

// Monte Carlo test: replicate r uses stream (cfg.stream + r) for both its
// dataset and its chain, so results do not depend on the worker count.
inline SimCheckResult sim_based_check(const GroupedDataset& data, const NormalPrior& prior, Discrepancy d,
                                      std::size_t replicates, const ChainConfig& cfg, std::size_t workers = 1) {
    if (!prior.proper()) throw config_error("the simulation-based check requires a proper prior");
    if (replicates < 1) throw config_error("need at least one replicate dataset");
    std::vector<QuantileVector> qs(replicates + 1);
    parallel_for(replicates + 1, workers, [&](std::size_t r) {
        ChainConfig c = cfg;
        c.stream = cfg.stream + r;
        if (r == 0) {
            qs[0] = discrepancy_quantiles(data, d, prior, c);
            return;
        }
        SeededStream gen = c.make_stream().derive(1);
        const auto x = draw_prior_predictive(data, prior, gen);
        qs[r] = discrepancy_quantiles(x, d, prior, c);
    });

    QuantileVector mean;
    for (const auto& q : qs)
        for (std::size_t k = 0; k < 5; ++k) mean.q[k] += q.q[k];
    for (auto& m : mean.q) m /= static_cast<double>(qs.size());

    SimCheckResult out;
    out.discrepancy = d;
    out.distances.reserve(qs.size());
    for (const auto& q : qs) out.distances.push_back(euclidean_distance(q, mean));
    out.distance_obs = out.distances[0];
    out.distance_q95 = sample_quantile(out.distances, 0.95);
    out.reject = out.distance_obs > out.distance_q95;
    return out;
}

// O'Hagan's conflict between N(w1, sd1^2) and N(w2, sd2^2): -2 log of the
// common height, after scaling both peaks to 1, where the curves cross
// between the modes.
inline double ohagan_conflict_normal(double w1, double sd1, double w2, double sd2) {
    if (!(sd1 > 0.0) || !(sd2 > 0.0)) throw std::invalid_argument("conflict measure needs positive standard deviations");
    const double z = (w1 - w2) / (sd1 + sd2);
    return z * z;
}

enum class ConflictLevel { None, Indeterminate, Clear };

inline ConflictLevel classify_conflict(double c) {
    if (c < 1.0) return ConflictLevel::None;
    if (c > 4.0) return ConflictLevel::Clear;
    return ConflictLevel::Indeterminate;
}

inline std::string to_string(ConflictLevel l) {
    switch (l) {
        case ConflictLevel::None: return "no conflict";
        case ConflictLevel::Indeterminate: return "indeterminate";
        case ConflictLevel::Clear: return "clear conflict";
    }
    return "?";
}

struct ConflictRecord {
    std::size_t group = 0;  // 0-based
    std::string label;
    double c_median = 0.0;
    double p_con = 1.0;
    double p_con_se = 0.0;
    double p_mixed = 1.0;
    double p_mixed_se = 0.0;
};

// Posterior median over the chain of c_i = conflict(likelihood of theta_i,
// null density N(mu, tau^2)).
inline std::vector<double> ohagan_posterior_median_c(const ChainOutput& chain, const GroupedDataset& data) {
    if (chain.empty()) throw std::invalid_argument("empty chain");
    if (chain.groups != data.size()) throw std::invalid_argument("chain and data differ in group count");
    const auto means = data.means();
    std::vector<double> out(chain.groups);
    std::vector<double> c(chain.size()), v;
    for (std::size_t i = 0; i < chain.groups; ++i) {
        for (std::size_t k = 0; k < chain.size(); ++k) {
            chain.mean_vars(k, v);
            const auto p = chain.draw(k);
            c[k] = ohagan_conflict_normal(means[i], std::sqrt(v[i]), p.mu, std::sqrt(p.tau2));
        }
        out[i] = sample_quantile(c, 0.5);
    }
    return out;
}

// Chain fitted to every group but i.
inline ChainOutput leave_one_out_chain(const GroupedDataset& data, std::size_t i, const NormalPrior& prior,
                                       const ChainConfig& cfg) {
    if (data.size() < 3) throw data_error("leave-one-out checks need at least three groups");
    if (i >= data.size()) throw std::out_of_range("group index out of range");
    return gibbs_posterior(data.without_group(i), cfg, data.has_known_variances(), prior);
}

namespace detail {
inline double held_out_mean_var(const ChainOutput& chain, std::size_t k, const GroupedDataset& data, std::size_t i) {
    const auto& g = data.group(i);
    if (chain.sigma2_known) return *g.sigma2 / static_cast<double>(g.n);
    return chain.sigma2[k] / static_cast<double>(g.n);
}
}  // namespace detail

// Pr(theta_rep - theta_fix >= 0) with theta_rep ~ N(mu, tau^2) from the
// leave-one-out chain and theta_fix ~ N(xbar_i, sigma^2/n_i).
inline PValue conflict_pvalue(const ChainOutput& loo, const GroupedDataset& data, std::size_t i, SeededStream& rng) {
    if (loo.empty()) throw std::invalid_argument("empty chain");
    const double xbar = data.group(i).mean;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < loo.size(); ++k) {
        const auto p = loo.draw(k);
        const double rep = rng.normal(p.mu, p.tau2);
        const double fix = rng.normal(xbar, detail::held_out_mean_var(loo, k, data, i));
        hits += rep - fix >= 0.0;
    }
    const double pv = static_cast<double>(hits) / static_cast<double>(loo.size());
    return {pv, binomial_se(pv, loo.size())};
}

// Pr(T_i >= xbar_i) with theta_i ~ N(mu, tau^2) and T_i ~ N(theta_i, sigma^2/n_i).
inline PValue cross_validation_mixed_p(const ChainOutput& loo, const GroupedDataset& data, std::size_t i,
                                       SeededStream& rng) {
    if (loo.empty()) throw std::invalid_argument("empty chain");
    const double xbar = data.group(i).mean;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < loo.size(); ++k) {
        const auto p = loo.draw(k);
        const double theta = rng.normal(p.mu, p.tau2);
        const double t = rng.normal(theta, detail::held_out_mean_var(loo, k, data, i));
        hits += t >= xbar;
    }
    const double pv = static_cast<double>(hits) / static_cast<double>(loo.size());
    return {pv, binomial_se(pv, loo.size())};
}

inline PValue conflict_pvalue(const GroupedDataset& data, std::size_t i, const NormalPrior& prior,
                              const ChainConfig& cfg) {
    const auto loo = leave_one_out_chain(data, i, prior, cfg);
    auto rng = cfg.make_stream().derive(11);
    return conflict_pvalue(loo, data, i, rng);
}

inline PValue cross_validation_mixed_p(const GroupedDataset& data, std::size_t i, const NormalPrior& prior,
                                       const ChainConfig& cfg) {
    const auto loo = leave_one_out_chain(data, i, prior, cfg);
    auto rng = cfg.make_stream().derive(12);
    return cross_validation_mixed_p(loo, data, i, rng);
}

// All three per-group conflict measures. Group i's leave-one-out chain uses
// stream cfg.stream + 1 + i; the full-data chain uses cfg.stream.
inline std::vector<ConflictRecord> conflict_suite(const GroupedDataset& data, const NormalPrior& prior,
                                                  const ChainConfig& cfg, std::size_t workers = 1) {
    const std::size_t I = data.size();
    const auto full = gibbs_posterior(data, cfg, data.has_known_variances(), prior);
    const auto c = ohagan_posterior_median_c(full, data);
    std::vector<ConflictRecord> out(I);
    parallel_for(I, workers, [&](std::size_t i) {
        ChainConfig ci = cfg;
        ci.stream = cfg.stream + 1 + i;
        const auto loo = leave_one_out_chain(data, i, prior, ci);
        auto r1 = ci.make_stream().derive(11);
        auto r2 = ci.make_stream().derive(12);
        const auto pc = conflict_pvalue(loo, data, i, r1);
        const auto pm = cross_validation_mixed_p(loo, data, i, r2);
        out[i] = {i, data.group(i).label, c[i], pc.p, pc.se, pm.p, pm.se};
    });
    return out;
}

}  // namespace hiercheck
