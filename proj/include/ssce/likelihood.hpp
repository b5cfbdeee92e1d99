#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ssce/model.hpp"

namespace ssce {

// One specimen: prior exposure and the recorded start time of its failure
// stage. Failure stage index is stage_start + 2 under the shared time
// convention (the stage covering (stage_start, stage_start+1]).
struct Observation {
    double ts;          // prior exposure, >= 0
    int stage_start;    // nonnegative integer
    bool excluded = false;
};

struct Dataset {
    std::vector<Observation> observations;
    TestPlan plan;

    std::size_t active_count() const;
};

// Parameter axis order used by every 4-vector/4x4 quantity below.
enum class Theta { beta = 0, n = 1, zeta = 2, v_th = 3 };

using ScoreVector = std::array<double, 4>;
using ScoreJacobian = std::array<std::array<double, 4>, 4>; // [equation][parameter]

// Conditional log-likelihood over the non-excluded observations.
double log_likelihood(const Dataset& data, const ModelParams& params);

// The delta function for one parameter at boundary tau_i (i >= k-1):
//   delta_beta = eps^beta ln eps
//   delta_n    = eps^(beta-1) * S_n,  S_n = [ (1-v)^n ln(1-v) ts + sum w^n ln w ] / k0
//   delta_zeta = eps^beta
//   delta_v_th = eps^(beta-1) * S_v,  S_v = [ (1-v)^(n-1) ts + sum w^(n-1) ] / k0
// with w = (m-1)dv - v_th summed over m = k..i. The prior-exposure terms are
// included so that each delta is proportional to the same-parameter partial
// derivative of eps^beta (factors 1, beta/zeta, -beta/zeta, -beta*n/zeta).
double delta(Theta theta, int boundary_index, double ts, const ModelParams& params,
             const TestPlan& plan);

// Left-hand sides of the four simplified likelihood equations:
//   sum_j (-delta(tau_{l-1}) + delta(tau_l) E_j)/(1 - E_j) + sum_j delta(tau_1)
// with E_j = exp(eps^beta(tau_{l-1}) - eps^beta(tau_l)). The beta component
// equals d(ln L)/d beta exactly; the others are nonzero constant multiples of
// the corresponding partials.
ScoreVector score_equations(const Dataset& data, const ModelParams& params);

// Analytic 4x4 Jacobian of score_equations (generally non-symmetric).
ScoreJacobian score_jacobian(const Dataset& data, const ModelParams& params);

} // namespace ssce
