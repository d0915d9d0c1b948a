#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

namespace hiercheck {

// Trigamma psi_1(x) = sum_{i>=0} (x+i)^{-2} for x > 0. Upward recurrence to
// x >= 10, then the asymptotic (Bernoulli) series.
inline double trigamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("trigamma: argument must be positive and finite");
    }
    double acc = 0.0;
    while (x < 10.0) {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / x;
    const double r2 = r * r;
    // 1/x + 1/(2x^2) + sum_k B_2k / x^(2k+1)
    const double tail =
        r2 * r *
        (1.0 / 6.0 +
         r2 * (-1.0 / 30.0 +
               r2 * (1.0 / 42.0 +
                     r2 * (-1.0 / 30.0 + r2 * (5.0 / 66.0 + r2 * (-691.0 / 2730.0 + r2 * (7.0 / 6.0)))))));
    return acc + r + 0.5 * r2 + tail;
}

inline double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) return -std::numeric_limits<double>::infinity();
    const double m = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (!std::isfinite(a)) return a;
    return a + std::log1p(std::exp(b - a));
}

}  // namespace hiercheck
