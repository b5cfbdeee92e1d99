#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssce/likelihood.hpp"

namespace ssce {

struct FitConfig {
    std::array<double, 4> init{2.0, 2.0, 1.0, 0.5}; // beta, n, zeta, v_th
    double profile_start = 0.5;
    double profile_end = 0.999;
    double profile_step = 0.001;
    double newton_tol = 1e-10;   // residual max-norm
    int max_iter = 100;
    double min_damping = std::ldexp(1.0, -30);
    double k0 = 1e4;

    void validate() const; // throws ConfigError
};

struct ProfilePoint {
    double v_th;
    double loglik;
    std::array<double, 3> sub; // beta, n, zeta at this grid point
};

struct FitResult {
    ModelParams params;
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0; // final 4-parameter solve
    std::vector<ProfilePoint> profile_trace;
    // Substantive caveats about the solution itself (spurious root, failed
    // final solve); empty means the fit is clean.
    std::vector<std::string> warnings;
    // Grid points the profile sweep skipped; routine, also visible as gaps in
    // profile_trace.
    std::vector<std::string> profile_warnings;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 100;
    double min_damping = std::ldexp(1.0, -30);
};

struct NewtonResult {
    Eigen::VectorXd x;
    bool converged = false;
    int iterations = 0;
    double residual_max = 0.0;
    std::vector<double> accepted_norms; // Euclidean residual norms, initial point first
    std::string failure;                // empty when converged
};

// Damped Newton iteration x += s * (-J^-1 F) with backtracking: s halves from
// 1 until ||F(x + s d)|| < (1 - s/2) ||F(x)||. Steps leaving the feasible
// region, or on which the residual throws or is non-finite, are halved too.
// Stops when ||F||_inf <= tol. Never throws for solver-side failures; they
// are reported in the result.
NewtonResult damped_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                           const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                           const Eigen::VectorXd& x0,
                           const std::function<bool(const Eigen::VectorXd&)>& feasible,
                           const NewtonOptions& options = {});

// True iff params satisfy positivity, v_th in [0,1), and the guard band
// keeping the first effective stage clear of the log singularity.
bool feasible_params(const ModelParams& params, const TestPlan& plan);

struct ProfileOutcome {
    ProfilePoint best;
    std::vector<ProfilePoint> trace;
    std::vector<std::string> warnings;
};

// Sweeps v_th over {start, start+step, ... <= end}, solving the 3-equation
// subsystem in (beta, n, zeta) at each grid point with warm starts, and
// returns the grid point with the highest log-likelihood. Throws FitError if
// every grid point fails.
ProfileOutcome profile_stage(const Dataset& data, const FitConfig& config);

// Profile sweep followed by the full 4-parameter damped Newton solve from the
// profile maximizer.
FitResult fit(const Dataset& data, const FitConfig& config);

} // namespace ssce
