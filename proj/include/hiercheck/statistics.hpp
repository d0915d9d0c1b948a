#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hiercheck/dataset.hpp"
#include "hiercheck/errors.hpp"
#include "hiercheck/normal.hpp"

namespace hiercheck {

enum class StatisticKind { MaxGroupMean, MinGroupMean, GrandMean, MaxRate, MinRate, MaxAbsDeviation };

inline std::string to_string(StatisticKind k) {
    switch (k) {
        case StatisticKind::MaxGroupMean: return "max";
        case StatisticKind::MinGroupMean: return "min";
        case StatisticKind::GrandMean: return "grand-mean";
        case StatisticKind::MaxRate: return "max-rate";
        case StatisticKind::MinRate: return "min-rate";
        case StatisticKind::MaxAbsDeviation: return "max-abs-deviation";
    }
    return "?";
}

inline StatisticKind parse_statistic(std::string_view s) {
    if (s == "max") return StatisticKind::MaxGroupMean;
    if (s == "min") return StatisticKind::MinGroupMean;
    if (s == "grand-mean" || s == "mean") return StatisticKind::GrandMean;
    if (s == "max-rate") return StatisticKind::MaxRate;
    if (s == "min-rate") return StatisticKind::MinRate;
    if (s == "max-abs-deviation") return StatisticKind::MaxAbsDeviation;
    throw config_error("unknown statistic '" + std::string(s) + "'");
}

// Which order statistic a kind refers to; GrandMean and MaxAbsDeviation are neither.
enum class Extreme { Max, Min };

inline bool is_extreme(StatisticKind k) {
    return k == StatisticKind::MaxGroupMean || k == StatisticKind::MinGroupMean || k == StatisticKind::MaxRate ||
           k == StatisticKind::MinRate;
}

inline Extreme extreme_of(StatisticKind k) {
    if (k == StatisticKind::MinGroupMean || k == StatisticKind::MinRate) return Extreme::Min;
    if (k == StatisticKind::MaxGroupMean || k == StatisticKind::MaxRate) return Extreme::Max;
    throw config_error("statistic '" + to_string(k) + "' is not an order statistic");
}

// Surprising direction of a statistic: large maxima, small minima.
enum class Tail { Upper, Lower };

inline Tail tail_of(StatisticKind k) {
    return (k == StatisticKind::MinGroupMean || k == StatisticKind::MinRate) ? Tail::Lower : Tail::Upper;
}

inline double extreme_value(std::span<const double> xs, Extreme e) {
    if (xs.empty()) throw std::invalid_argument("empty group vector");
    return e == Extreme::Max ? *std::max_element(xs.begin(), xs.end()) : *std::min_element(xs.begin(), xs.end());
}

inline double weighted_grand_mean(std::span<const double> means, std::span<const double> sizes) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        num += sizes[i] * means[i];
        den += sizes[i];
    }
    return num / den;
}

inline double compute_statistic(const GroupedDataset& data, StatisticKind kind) {
    if (data.size() == 0) throw data_error("empty dataset");
    const auto m = data.means();
    switch (kind) {
        case StatisticKind::MaxGroupMean: return extreme_value(m, Extreme::Max);
        case StatisticKind::MinGroupMean: return extreme_value(m, Extreme::Min);
        case StatisticKind::GrandMean: {
            const auto n = data.sizes();
            return weighted_grand_mean(m, n);
        }
        case StatisticKind::MaxAbsDeviation:
            throw config_error("max-abs-deviation is a discrepancy of (theta, mu); use max_abs_deviation()");
        case StatisticKind::MaxRate:
        case StatisticKind::MinRate:
            throw config_error("rate statistics apply to count data");
    }
    return 0.0;
}

inline double compute_statistic(const CountDataset& data, StatisticKind kind) {
    if (data.size() == 0) throw data_error("empty dataset");
    const auto r = data.rates();
    if (kind == StatisticKind::MaxRate) return extreme_value(r, Extreme::Max);
    if (kind == StatisticKind::MinRate) return extreme_value(r, Extreme::Min);
    throw config_error("statistic '" + to_string(kind) + "' does not apply to count data");
}

// Discrepancy max_i |theta_i - mu|.
inline double max_abs_deviation(std::span<const double> theta, double mu) {
    double d = 0.0;
    for (double t : theta) d = std::max(d, std::fabs(t - mu));
    return d;
}

namespace detail {
inline void check_density_args(std::span<const double> theta, std::span<const double> var) {
    if (theta.size() != var.size()) throw std::invalid_argument("theta and variance vectors differ in length");
    if (theta.empty()) throw std::invalid_argument("empty parameter vector");
    for (double v : var)
        if (!(v > 0.0)) throw std::invalid_argument("variances must be positive");
}
}  // namespace detail

// log f_T(t | theta) for the maximum (or minimum) of independent normals
// N(theta_k, var_k):  sum_k N(t|theta_k,v_k) prod_{l!=k} F(t|theta_l,v_l),
// with survival functions in place of F for the minimum. Evaluated as
// sum_l log F_l + logsumexp_k(log N_k - log F_k).
inline double log_extreme_density(double t, std::span<const double> theta, std::span<const double> var, Extreme e) {
    detail::check_density_args(theta, var);
    double sum_logF = 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    thread_local std::vector<double> r;
    r.resize(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        const double lf = e == Extreme::Max ? normal::log_cdf(t, theta[k], var[k]) : normal::log_sf(t, theta[k], var[k]);
        const double ln = normal::log_pdf(t, theta[k], var[k]);
        sum_logF += lf;
        r[k] = ln - lf;
        mx = std::max(mx, r[k]);
    }
    double s = 0.0;
    for (double x : r) s += std::exp(x - mx);
    return sum_logF + mx + std::log(s);
}

inline double max_stat_density(double t, std::span<const double> theta, std::span<const double> var) {
    return std::exp(log_extreme_density(t, theta, var, Extreme::Max));
}

inline double min_stat_density(double t, std::span<const double> theta, std::span<const double> var) {
    return std::exp(log_extreme_density(t, theta, var, Extreme::Min));
}

// P(T >= t | theta) for the maximum, P(T <= t | theta) for the minimum.
inline double extreme_tail_prob(double t, std::span<const double> theta, std::span<const double> var, Extreme e) {
    double log_all = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        log_all += e == Extreme::Max ? normal::log_cdf(t, theta[k], var[k]) : normal::log_sf(t, theta[k], var[k]);
    }
    return -std::expm1(log_all);
}

// Sampling law of the weighted grand mean: N(mu_T, V_T) with
// mu_T = sum n_i theta_i / sum n_i and V_T = sum n_i sigma_i^2 / (sum n_i)^2.
struct GrandMeanLaw {
    double mean;
    double var;
};

inline GrandMeanLaw grand_mean_law(std::span<const double> theta, const GroupedDataset& data) {
    if (theta.size() != data.size()) throw std::invalid_argument("theta length differs from group count");
    const auto s2 = data.variances();
    double N = 0.0, num = 0.0, v = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double n = static_cast<double>(data.group(i).n);
        N += n;
        num += n * theta[i];
        v += n * s2[i];
    }
    return {num / N, v / (N * N)};
}

inline double grand_mean_density(double t, std::span<const double> theta, const GroupedDataset& data) {
    const auto law = grand_mean_law(theta, data);
    return normal::pdf(t, law.mean, law.var);
}

// Incremental evaluator of log f_T(t_obs | theta) for a fixed t_obs: caches
// per-component log F and log N terms so a single-coordinate change costs
// one CDF evaluation plus an O(I) log-sum-exp.
class ExtremeDensityCache {
public:
    ExtremeDensityCache(double t_obs, Extreme e) : t_(t_obs), e_(e) {}

    void reset(std::span<const double> theta, std::span<const double> var) {
        detail::check_density_args(theta, var);
        const std::size_t I = theta.size();
        logF_.resize(I);
        r_.resize(I);
        sum_logF_ = 0.0;
        for (std::size_t k = 0; k < I; ++k) {
            auto [lf, rk] = terms(theta[k], var[k]);
            logF_[k] = lf;
            r_[k] = rk;
            sum_logF_ += lf;
        }
        value_ = evaluate(sum_logF_, static_cast<std::size_t>(-1), 0.0);
    }

    double log_density() const { return value_; }

    // log f_T with component i replaced by (theta_i, var_i); does not commit.
    double log_density_with(std::size_t i, double theta_i, double var_i) {
        auto [lf, rk] = terms(theta_i, var_i);
        pending_ = {i, lf, rk};
        return evaluate(sum_logF_ - logF_[i] + lf, i, rk);
    }

    // Commit the last log_density_with() proposal.
    void accept() {
        const auto [i, lf, rk] = pending_;
        sum_logF_ += lf - logF_[i];
        logF_[i] = lf;
        r_[i] = rk;
        value_ = evaluate(sum_logF_, static_cast<std::size_t>(-1), 0.0);
    }

private:
    struct Pending {
        std::size_t i = 0;
        double lf = 0.0;
        double rk = 0.0;
    };

    std::pair<double, double> terms(double theta, double var) const {
        const double lf = e_ == Extreme::Max ? normal::log_cdf(t_, theta, var) : normal::log_sf(t_, theta, var);
        const double ln = normal::log_pdf(t_, theta, var);
        return {lf, ln - lf};
    }

    double evaluate(double sum_logF, std::size_t replaced, double r_replaced) const {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < r_.size(); ++k) mx = std::max(mx, k == replaced ? r_replaced : r_[k]);
        double s = 0.0;
        for (std::size_t k = 0; k < r_.size(); ++k) s += std::exp((k == replaced ? r_replaced : r_[k]) - mx);
        return sum_logF + mx + std::log(s);
    }

    double t_;
    Extreme e_;
    std::vector<double> logF_;
    std::vector<double> r_;
    double sum_logF_ = 0.0;
    double value_ = 0.0;
    Pending pending_;
};

}  // namespace hiercheck
