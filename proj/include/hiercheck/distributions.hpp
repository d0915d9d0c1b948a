#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hiercheck/errors.hpp"
#include "hiercheck/rng.hpp"

namespace hiercheck {

// Scaled inverse chi-square chi^-2(nu, a): the law of nu*a / Y with Y ~ chi^2_nu.
inline double sample_scaled_inv_chisq(double nu, double a, SeededStream& rng) {
    if (!(nu > 0.0) || !(a > 0.0)) {
        throw std::invalid_argument("scaled inverse chi-square needs nu > 0 and a > 0");
    }
    return nu * a / rng.chisq(nu);
}

// Second-level distributions used to generate group means under alternatives.
struct Alternative {
    enum class Kind { Exponential, Gumbel, LogNormal, Normal, Gamma };

    Kind kind = Kind::Exponential;
    // Exponential: rate p1.  Gumbel: location p1, scale p2.
    // LogNormal: log-mean p1, log-variance p2.  Normal: mean p1, variance p2.
    // Gamma: shape p1, rate p2.
    double p1 = 1.0;
    double p2 = 1.0;

    static Alternative exponential(double rate = 1.0) { return {Kind::Exponential, rate, 0.0}; }
    static Alternative gumbel(double loc, double scale) { return {Kind::Gumbel, loc, scale}; }
    static Alternative lognormal(double logmean = 0.0, double logvar = 1.0) {
        return {Kind::LogNormal, logmean, logvar};
    }
    static Alternative normal(double mean, double var) { return {Kind::Normal, mean, var}; }
    static Alternative gamma(double shape, double rate) { return {Kind::Gamma, shape, rate}; }

    void validate() const {
        switch (kind) {
            case Kind::Exponential:
                if (!(p1 > 0.0)) throw std::invalid_argument("exponential rate must be positive");
                break;
            case Kind::Gumbel:
                if (!(p2 > 0.0)) throw std::invalid_argument("Gumbel scale must be positive");
                break;
            case Kind::LogNormal:
            case Kind::Normal:
                if (!(p2 > 0.0)) throw std::invalid_argument("variance must be positive");
                break;
            case Kind::Gamma:
                if (!(p1 > 0.0 && p2 > 0.0)) throw std::invalid_argument("gamma shape and rate must be positive");
                break;
        }
    }

    std::string name() const {
        switch (kind) {
            case Kind::Exponential: return "exponential";
            case Kind::Gumbel: return "gumbel";
            case Kind::LogNormal: return "lognormal";
            case Kind::Normal: return "normal";
            case Kind::Gamma: return "gamma";
        }
        return "?";
    }

    // Names accepted by the harness: exponential, gumbel, lognormal (paper
    // parameterisations Exp(1), Gumbel(0,2), LogNormal(0,1)), plus normal.
    static Alternative parse(std::string_view s) {
        if (s == "exponential" || s == "exp") return exponential(1.0);
        if (s == "gumbel") return gumbel(0.0, 2.0);
        if (s == "lognormal") return lognormal(0.0, 1.0);
        if (s == "normal") return normal(0.0, 1.0);
        throw config_error("unknown alternative '" + std::string(s) + "'");
    }
};

inline double sample_alternative(const Alternative& alt, SeededStream& rng) {
    alt.validate();
    switch (alt.kind) {
        case Alternative::Kind::Exponential:
            return -std::log(rng.uniform()) / alt.p1;
        case Alternative::Kind::Gumbel:
            return alt.p1 - alt.p2 * std::log(-std::log(rng.uniform()));
        case Alternative::Kind::LogNormal:
            return std::exp(rng.normal(alt.p1, alt.p2));
        case Alternative::Kind::Normal:
            return rng.normal(alt.p1, alt.p2);
        case Alternative::Kind::Gamma:
            return rng.gamma(alt.p1) / alt.p2;
    }
    return 0.0;
}

}  // namespace hiercheck
