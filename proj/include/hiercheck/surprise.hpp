#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hiercheck/normal.hpp"
#include "hiercheck/statistics.hpp"

namespace hiercheck {

enum class Construction { EBPrior, EBPost, Posterior, PartialPosterior, CrossValidation, Conflict };

inline std::string to_string(Construction c) {
    switch (c) {
        case Construction::EBPrior: return "eb-prior";
        case Construction::EBPost: return "eb-post";
        case Construction::Posterior: return "posterior";
        case Construction::PartialPosterior: return "partial-posterior";
        case Construction::CrossValidation: return "cross-validation";
        case Construction::Conflict: return "conflict";
    }
    return "?";
}

inline Construction parse_construction(const std::string& s) {
    for (auto c : {Construction::EBPrior, Construction::EBPost, Construction::Posterior,
                   Construction::PartialPosterior, Construction::CrossValidation, Construction::Conflict}) {
        if (to_string(c) == s) return c;
    }
    if (s == "ppp") return Construction::PartialPosterior;
    if (s == "post") return Construction::Posterior;
    throw config_error("unknown construction '" + s + "'");
}

struct PValue {
    double p = 1.0;
    double se = 0.0;
};

// One measure of surprise for one reference predictive distribution.
struct SurpriseReport {
    Construction construction = Construction::Posterior;
    double p = 1.0;
    double p_se = 0.0;
    std::optional<double> rps;
    std::size_t draws = 0;
    double t_obs = 0.0;
};

inline double binomial_se(double p, std::size_t m) {
    return m == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(m));
}

// Fraction of draws at least as extreme as t_obs; ties count toward the tail.
inline PValue p_value_mc(std::span<const double> draws, double t_obs, Tail tail = Tail::Upper) {
    if (draws.empty()) throw std::invalid_argument("p-value needs at least one draw");
    std::size_t c = 0;
    for (double t : draws) c += tail == Tail::Upper ? (t >= t_obs) : (t <= t_obs);
    const double p = static_cast<double>(c) / static_cast<double>(draws.size());
    return {p, binomial_se(p, draws.size())};
}

// Pr(|T - mu0| >= |t_obs - mu0|).
inline PValue two_sided_p(std::span<const double> draws, double t_obs, double mu0) {
    if (draws.empty()) throw std::invalid_argument("p-value needs at least one draw");
    const double d = std::fabs(t_obs - mu0);
    std::size_t c = 0;
    for (double t : draws) c += std::fabs(t - mu0) >= d;
    const double p = static_cast<double>(c) / static_cast<double>(draws.size());
    return {p, binomial_se(p, draws.size())};
}

using DensityFn = std::function<double(double)>;

struct Interval {
    double lo;
    double hi;
};

// [min - 4 sd, max + 4 sd] of a set of statistic draws.
inline Interval search_interval(std::span<const double> draws) {
    if (draws.empty()) throw std::invalid_argument("search interval needs draws");
    const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
    double mean = 0.0;
    for (double x : draws) mean += x;
    mean /= static_cast<double>(draws.size());
    double var = 0.0;
    for (double x : draws) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(draws.size()));
    const double pad = sd > 0.0 ? 4.0 * sd : 1.0;
    return {*mn - pad, *mx + pad};
}

// sup_t h(t) on [lo, hi]: 512-point grid, then golden-section refinement of
// the best cell until the bracket is narrower than 1e-8.
inline double density_supremum(const DensityFn& h, Interval iv) {
    constexpr int kGrid = 512;
    const double step = (iv.hi - iv.lo) / (kGrid - 1);
    int best = 0;
    double best_val = -1.0;
    for (int j = 0; j < kGrid; ++j) {
        const double v = h(iv.lo + step * j);
        if (!std::isfinite(v)) throw std::domain_error("density evaluator is not finite on the search grid");
        if (v > best_val) {
            best_val = v;
            best = j;
        }
    }
    double a = iv.lo + step * std::max(0, best - 1);
    double b = iv.lo + step * std::min(kGrid - 1, best + 1);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = h(c), fd = h(d);
    while (b - a > 1e-8) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = h(d);
        }
    }
    return std::max({best_val, fc, fd});
}

// RPS = h(t_obs) / sup_t h(t).
inline double rps_rao_blackwell(const DensityFn& h, double t_obs, Interval iv) {
    const double at = h(t_obs);
    if (!std::isfinite(at)) throw std::domain_error("density evaluator is not finite at t_obs");
    const double sup = std::max(density_supremum(h, iv), at);
    if (!(sup > 0.0)) return 0.0;
    return std::clamp(at / sup, 0.0, 1.0);
}

// The printed two-sided form [h(t_obs)/h(mu0)] / [sup h / h(mu0)]; the h(mu0)
// factors cancel so this equals rps_rao_blackwell whenever h(mu0) > 0.
inline double rps_relative_to(const DensityFn& h, double t_obs, double mu0, Interval iv) {
    const double h0 = h(mu0);
    const double sup = std::max(density_supremum(h, iv), h(t_obs));
    return std::clamp((h(t_obs) / h0) / (sup / h0), 0.0, 1.0);
}

// Rao-Blackwellised predictive density of an order statistic: the average of
// f_T(t | theta_k, v_k) over K parameter draws, stored row-major (K x I).
class ExtremeMixture {
public:
    ExtremeMixture(std::size_t groups, Extreme e) : I_(groups), e_(e) {}

    void add(std::span<const double> theta, std::span<const double> var) {
        if (theta.size() != I_ || var.size() != I_) throw std::invalid_argument("mixture component size mismatch");
        theta_.insert(theta_.end(), theta.begin(), theta.end());
        var_.insert(var_.end(), var.begin(), var.end());
    }

    std::size_t components() const { return I_ == 0 ? 0 : theta_.size() / I_; }

    double operator()(double t) const {
        const std::size_t K = components();
        if (K == 0) throw std::logic_error("empty mixture");
        double s = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            s += std::exp(log_extreme_density(t, std::span(theta_).subspan(k * I_, I_),
                                              std::span(var_).subspan(k * I_, I_), e_));
        }
        return s / static_cast<double>(K);
    }

private:
    std::size_t I_;
    Extreme e_;
    std::vector<double> theta_;
    std::vector<double> var_;
};

// Average of univariate normal densities (grand-mean predictives).
class NormalMixture {
public:
    void add(double mean, double var) {
        mean_.push_back(mean);
        var_.push_back(var);
    }
    std::size_t components() const { return mean_.size(); }

    double operator()(double t) const {
        if (mean_.empty()) throw std::logic_error("empty mixture");
        double s = 0.0;
        for (std::size_t k = 0; k < mean_.size(); ++k) s += normal::pdf(t, mean_[k], var_[k]);
        return s / static_cast<double>(mean_.size());
    }

private:
    std::vector<double> mean_;
    std::vector<double> var_;
};

}  // namespace hiercheck
