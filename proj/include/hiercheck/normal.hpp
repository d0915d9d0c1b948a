#pragma once

// Normal distribution primitives in double precision. The CDF is built on
// std::erfc (glibc's implementation is accurate to a few ulp); the log-CDF
// switches to an asymptotic series deep in the lower tail where erfc
// underflows.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace hiercheck::normal {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2*pi))

inline double std_log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

inline double std_pdf(double z) { return std::exp(std_log_pdf(z)); }

inline double std_cdf(double z) { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

// log Phi(z), accurate over the whole real line.
inline double std_log_cdf(double z) {
    if (z > 5.0) {
        return std::log1p(-0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0));
    }
    if (z > -30.0) {
        return std::log(0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0));
    }
    // Mills-ratio expansion: Phi(z) ~ phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
    const double w = 1.0 / (z * z);
    const double series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w)));
    return std_log_pdf(z) - std::log(-z) + std::log(series);
}

// Mean/variance parameterisation, matching N(t | a, b) and F(t | a, b).
inline double log_pdf(double x, double mean, double var) {
    return std_log_pdf((x - mean) / std::sqrt(var)) - 0.5 * std::log(var);
}

inline double pdf(double x, double mean, double var) { return std::exp(log_pdf(x, mean, var)); }

inline double cdf(double x, double mean, double var) { return std_cdf((x - mean) / std::sqrt(var)); }

inline double log_cdf(double x, double mean, double var) {
    return std_log_cdf((x - mean) / std::sqrt(var));
}

inline double log_sf(double x, double mean, double var) {
    return std_log_cdf((mean - x) / std::sqrt(var));
}

// log(Phi(a) - Phi(b)) for a > b, without cancellation in either tail.
inline double std_log_cdf_diff(double a, double b) {
    if (!(a > b)) return -std::numeric_limits<double>::infinity();
    if (b > 0.0) {
        // both in the upper half: use survival functions Phi(-b) - Phi(-a)
        const double hi = std_log_cdf(-b);
        const double lo = std_log_cdf(-a);
        return hi + std::log1p(-std::exp(lo - hi));
    }
    const double hi = std_log_cdf(a);
    const double lo = std_log_cdf(b);
    return hi + std::log1p(-std::exp(lo - hi));
}

// Inverse standard normal CDF, Wichura's AS241 (PPND16), ~1e-16 relative.
inline double std_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw std::domain_error("normal quantile: p outside [0, 1]");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                   1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                4.6303378461565452959) * r + 1.42343711074968357734) /
              (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                   0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                   0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                5.4637849111641143699) * r + 6.6579046435011037772) /
              (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                   7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

}  // namespace hiercheck::normal
