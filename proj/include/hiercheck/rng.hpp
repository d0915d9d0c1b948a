#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hiercheck {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

// A reproducible random stream identified by (seed, stream id). The engine
// is seeded from both words through std::seed_seq, so equal pairs replay the
// same sequence and distinct stream ids give unrelated sequences.
//
// A stream is a value: copy it to fork an identical sequence, never share one
// between threads.
class SeededStream {
public:
    SeededStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x68636b31u};
        engine_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // Child stream for a sub-task (replicate r, chain j, ...). Depends only on
    // (seed, stream id, sub), never on how many draws this stream has made.
    SeededStream derive(std::uint64_t sub) const {
        return SeededStream(seed_, detail::splitmix64(stream_ * 0x100000001b3ULL ^ detail::splitmix64(sub + 1)));
    }

    // Uniform on the open interval (0, 1).
    double uniform() {
        for (;;) {
            const double u = std::generate_canonical<double, 53>(engine_);
            if (u > 0.0) return u;
        }
    }

    double normal() { return std_normal_(engine_); }
    double normal(double mean, double var) { return mean + std::sqrt(var) * std_normal_(engine_); }

    // Gamma with shape a and unit scale.
    double gamma(double shape) {
        return gamma_(engine_, std::gamma_distribution<double>::param_type(shape, 1.0));
    }

    double chisq(double dof) { return 2.0 * gamma(0.5 * dof); }

    // log of a Gamma(shape, 1) draw; stays finite for very small shapes.
    double log_gamma_variate(double shape) {
        if (shape >= 1.0) return std::log(gamma(shape));
        return std::log(gamma(shape + 1.0)) + std::log(uniform()) / shape;
    }

    double beta(double a, double b) {
        const double lx = log_gamma_variate(a);
        const double ly = log_gamma_variate(b);
        return 1.0 / (1.0 + std::exp(ly - lx));
    }

    long binomial(long n, double p) {
        return binom_(engine_, std::binomial_distribution<long>::param_type(n, p));
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> std_normal_{0.0, 1.0};
    std::gamma_distribution<double> gamma_;
    std::binomial_distribution<long> binom_;
};

}  // namespace hiercheck
