#pragma once

#include <vector>

#include "ssce/model.hpp"

namespace ssce {

struct MomentResult {
    double mean_norm = 0.0;   // E[T]/dt
    double second_norm = 0.0; // E[T^2]/dt^2
    double sd_norm = 0.0;     // sqrt(second - mean^2), tiny negatives clamped
    int stages_used = 0;      // series truncation index count
    int quadrature_nodes = 0; // largest node count any integral needed
};

// A(tau) = exp(eps(0)^beta - eps(tau)^beta) * Int_0^inf (u + eps(tau)^beta)^(1/beta - 1) e^-u du,
// by Gauss-Laguerre with node doubling. Throws QuadratureError (carrying the
// achieved estimate and bound) if doubling does not converge; the integrand
// has an integrable u^(1/beta-1) singularity when eps(tau) = 0 and beta > 1,
// where convergence is genuinely slow.
double a_func(double tau, double ts, const ModelParams& params, const TestPlan& plan);

// B_i(tau), same prefactor times
// Int {(u+eps^beta)^(1/beta) - c_i} (u+eps^beta)^(1/beta-1) e^-u du
// with c_i = eps(tau_{i-1}) - (i-2) * inv_scale(i). Requires i >= k and
// tau in [i-2, i-1].
double b_func(int i, double tau, double ts, const ModelParams& params, const TestPlan& plan);

// Mean and second moment of the normalized failure time, conditional on
// survival through the prior exposure:
//   mean   = (k-2) + (1/beta) sum_{i>=k} (1/r_i) (A(tau_{i-1}) - A(tau_i))
//   second = (k-2)^2 + (2/beta) sum_{i>=k} (1/r_i)^2 (B_i(tau_{i-1}) - B_i(tau_i))
// Each bracketed difference is evaluated as its exact single-integral form
// over the stage (Gauss-Legendre with node doubling): differencing separately
// computed A values loses all precision on early stages where eps^beta is far
// below the smallest Laguerre node. The series stops once the conditional
// survival drops below 1e-16 (stage cap 10^6).
MomentResult moments(double ts, const ModelParams& params, const TestPlan& plan);

double mean_norm(double ts, const ModelParams& params, const TestPlan& plan);
double second_norm(double ts, const ModelParams& params, const TestPlan& plan);

struct CurveRow {
    double ts;
    MomentResult result;
};

// One MomentResult per grid point, deterministic order.
std::vector<CurveRow> curve(const std::vector<double>& ts_grid, const ModelParams& params,
                            const TestPlan& plan);

} // namespace ssce
