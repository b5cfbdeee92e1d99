#pragma once

#include <stdexcept>
#include <string>

namespace ssce {

// Invalid parameter values, malformed flag combinations, bad bin layouts.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input files (datasets, templates, bin specs).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation hit a singularity or produced a non-finite value.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A quadrature failed to reach the requested tolerance. Carries the achieved
// estimate and the successive-refinement error bound so callers can decide
// whether the partial answer is usable.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double estimate, double error_bound, int nodes)
        : std::runtime_error(what), estimate(estimate), error_bound(error_bound), nodes(nodes) {}

    double estimate;
    double error_bound;
    int nodes;
};

// Estimation could not proceed at all (e.g. every profile grid point failed).
struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ssce
