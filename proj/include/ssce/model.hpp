#pragma once

#include <vector>

#include "ssce/errors.hpp"

namespace ssce {

// Exact voltage-step ratio of the bundled dataset's test design: 5 kV steps on
// a 22/sqrt(3) kV base voltage, i.e. 5*sqrt(3)/22. Often displayed rounded as
// 0.39, but the rounded value does not reproduce the reference estimates.
inline constexpr double default_dv = 0.39364791081110845;

// The four estimated parameters plus the fixed normalizer k0.
struct ModelParams {
    double beta;       // Weibull shape, > 0
    double n;          // inverse-power exponent, > 0
    double zeta;       // scale ratio K~/k0, > 0
    double v_th;       // normalized threshold stress, in [0, 1)
    double k0 = 1e4;   // fixed normalizer, > 0, not estimated

    void validate() const; // throws ConfigError
};

// Normalized step plan. Time unit is the stage duration: stage i (i >= 2)
// covers normalized time (i-2, i-1] at stress (i-1)*dv, so tau_1 = 0 is the
// start of the test.
struct TestPlan {
    double dv = default_dv; // normalized voltage step, > 0

    void validate() const; // throws ConfigError
};

// Cumulative exposure at a normalized time.
struct Exposure {
    double value; // >= 0, nondecreasing in time
};

// Least stage index k >= 2 whose stress exceeds the threshold:
// (k-2)*dv <= v_th < (k-1)*dv. Stages before k impose no exposure.
int first_effective_stage(const ModelParams& params, const TestPlan& plan);

// Exposure rate dt/phi at the prior (in-service) stress: (1-v_th)^n/(k0*zeta).
double inv_scale_prior(const ModelParams& params);

// Exposure rate at stage m >= first_effective_stage: ((m-1)dv - v_th)^n/(k0*zeta).
double inv_scale(int stage, const ModelParams& params, const TestPlan& plan);

// (y + x)^beta - y^beta without cancellation (x, y >= 0). Naive subtraction
// loses the difference entirely once y^beta dwarfs it.
double pow_increment(double y, double x, double beta);

// Per-parameter-vector cache of stage rates and the partial sums feeding the
// score equations. Grows on demand; instances are cheap to build and are not
// meant to be shared across threads (each thread builds its own).
class StageCache {
public:
    StageCache(const ModelParams& params, const TestPlan& plan);

    const ModelParams& params() const { return params_; }
    const TestPlan& plan() const { return plan_; }
    int k() const { return k_; }
    double r_prior() const { return r_prior_; }

    // r_m for stage m >= k.
    double rate(int stage) const;
    // sum_{m=k}^{stage} r_m; stage = k-1 gives 0.
    double cum_rate(int stage) const;
    // exposure at the conditioning time tau_1 = 0.
    double eps1(double ts) const { return r_prior_ * ts; }
    // exposure at boundary tau_i = i-1, for i >= k-1.
    double eps_boundary(int i, double ts) const;
    // exposure at arbitrary normalized time tau >= 0.
    double eps_at(double tau, double ts) const;
    // ln of the conditional survival at tau: eps1^beta - eps(tau)^beta, <= 0,
    // evaluated without cancellation even when both powers are enormous.
    double log_survival(double tau, double ts) const;

    // Partial sums over stages m = k..i of powers of w = (m-1)dv - v_th,
    // each divided by k0. The prior-exposure term is added by the caller.
    double sum_wn_lnw(int i) const;   // w^n ln w
    double sum_wnm1(int i) const;     // w^(n-1)
    double sum_wn_ln2w(int i) const;  // w^n (ln w)^2
    double sum_wnm1_lnw(int i) const; // w^(n-1) ln w
    double sum_wnm2(int i) const;     // w^(n-2)

    // True if some stage in k..i sits exactly on the threshold (w = 0), which
    // makes the log-carrying sums singular.
    bool has_zero_width(int i) const;

private:
    void ensure(int stage) const;

    ModelParams params_;
    TestPlan plan_;
    int k_;
    double r_prior_;
    // index j holds stage m = k + j
    mutable std::vector<double> cum_r_;   // prefix sums, cum_r_[j] = sum_{m=k}^{k+j-1}
    mutable std::vector<double> cum_sn_;
    mutable std::vector<double> cum_sv_;
    mutable std::vector<double> cum_sn2_;
    mutable std::vector<double> cum_svn_;
    mutable std::vector<double> cum_sv2_;
    mutable std::vector<double> rate_;
    mutable int first_zero_width_ = -1;
};

// Exposure accumulated by normalized time tau given prior exposure ts.
Exposure exposure(double tau, double ts, const ModelParams& params, const TestPlan& plan);

// Conditional failure CDF G(tau | survival through the prior exposure).
double cdf_conditional(double tau, double ts, const ModelParams& params, const TestPlan& plan);
double cdf_conditional(double tau, double ts, const StageCache& cache);

// P(failure during stage l | survival through the prior exposure), l >= k.
double stage_probability(int l, double ts, const ModelParams& params, const TestPlan& plan);
double stage_probability(int l, double ts, const StageCache& cache);

} // namespace ssce
