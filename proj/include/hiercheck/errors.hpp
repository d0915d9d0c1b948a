#pragma once

#include <stdexcept>
#include <string>

namespace hiercheck {

// Malformed or inconsistent input data (CSV contents, dataset invariants).
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration or incompatible construction request.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An MCMC sampler could not make progress (e.g. zero acceptance after all
// proposal inflations were exhausted).
class sampler_abort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hiercheck
