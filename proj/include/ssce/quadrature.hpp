#pragma once

#include <functional>
#include <vector>

#include "ssce/errors.hpp"

namespace ssce {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Laguerre rule (weight e^{-u} on [0, inf)), nodes ascending.
// Computed by the Golub-Welsch tridiagonal eigenproblem, which stays accurate
// at high node counts where the textbook recurrence overflows. Rules are
// cached; the returned reference stays valid for the program lifetime.
const QuadratureRule& gauss_laguerre(int n);

// Gauss-Legendre rule on [-1, 1], nodes ascending. Same construction/caching.
const QuadratureRule& gauss_legendre(int n);

struct QuadratureResult {
    double value = 0.0;
    double error_bound = 0.0; // |last refinement - previous|, not rigorous
    int nodes = 0;
    bool converged = false;
};

inline constexpr int quad_start_nodes = 32;
inline constexpr int quad_max_nodes = 512;
inline constexpr double quad_rel_tol = 1e-10;

// Node-doubling driver: evaluates sum_i w_i f(x_i) under `rule(n)` for
// n = start, 2*start, ... until two successive estimates agree to rel_tol
// (relative to the latest, with an absolute floor) or the cap is reached.
QuadratureResult integrate_doubling(const std::function<double(double)>& f,
                                    const QuadratureRule& (*rule)(int),
                                    int start = quad_start_nodes,
                                    int cap = quad_max_nodes,
                                    double rel_tol = quad_rel_tol);

} // namespace ssce
