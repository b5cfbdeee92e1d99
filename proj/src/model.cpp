#include "ssce/model.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ssce {

namespace {

// Stage indices are bounded only by the series cutoffs of the callers; this
// cap turns a runaway loop into a diagnosable error.
constexpr int max_cached_stage = 50'000'000;

} // namespace

void ModelParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw ConfigError("beta must be positive and finite, got " + std::to_string(beta));
    if (!(n > 0.0) || !std::isfinite(n))
        throw ConfigError("n must be positive and finite, got " + std::to_string(n));
    if (!(zeta > 0.0) || !std::isfinite(zeta))
        throw ConfigError("zeta must be positive and finite, got " + std::to_string(zeta));
    if (!(v_th >= 0.0 && v_th < 1.0))
        throw ConfigError("v_th must lie in [0, 1), got " + std::to_string(v_th));
    if (!(k0 > 0.0) || !std::isfinite(k0))
        throw ConfigError("k0 must be positive and finite, got " + std::to_string(k0));
}

void TestPlan::validate() const {
    if (!(dv > 0.0) || !std::isfinite(dv))
        throw ConfigError("dv must be positive and finite, got " + std::to_string(dv));
}

int first_effective_stage(const ModelParams& params, const TestPlan& plan) {
    params.validate();
    plan.validate();
    int k = 2;
    while ((k - 1) * plan.dv <= params.v_th)
        ++k;
    return k;
}

double inv_scale_prior(const ModelParams& params) {
    params.validate();
    return std::pow(1.0 - params.v_th, params.n) / (params.k0 * params.zeta);
}

double inv_scale(int stage, const ModelParams& params, const TestPlan& plan) {
    const int k = first_effective_stage(params, plan);
    if (stage < k)
        throw ConfigError("stage " + std::to_string(stage) + " is below the first effective stage " +
                          std::to_string(k));
    const double w = (stage - 1) * plan.dv - params.v_th;
    return std::pow(w, params.n) / (params.k0 * params.zeta);
}

double pow_increment(double y, double x, double beta) {
    if (x == 0.0)
        return 0.0;
    if (y == 0.0)
        return std::pow(x, beta);
    return std::pow(y, beta) * std::expm1(beta * std::log1p(x / y));
}

StageCache::StageCache(const ModelParams& params, const TestPlan& plan)
    : params_(params), plan_(plan) {
    params_.validate();
    plan_.validate();
    k_ = first_effective_stage(params_, plan_);
    r_prior_ = inv_scale_prior(params_);
    cum_r_.push_back(0.0);
    cum_sn_.push_back(0.0);
    cum_sv_.push_back(0.0);
    cum_sn2_.push_back(0.0);
    cum_svn_.push_back(0.0);
    cum_sv2_.push_back(0.0);
}

void StageCache::ensure(int stage) const {
    const int need = stage - k_ + 1; // number of stages k..stage
    if (need < static_cast<int>(cum_r_.size()))
        return;
    if (stage > max_cached_stage)
        throw NumericalError("stage index " + std::to_string(stage) + " exceeds the cache cap");
    const double n = params_.n;
    const double k0 = params_.k0;
    const double norm = k0 * params_.zeta;
    for (int j = static_cast<int>(cum_r_.size()) - 1; j < need; ++j) {
        const int m = k_ + j;
        const double w = (m - 1) * plan_.dv - params_.v_th;
        double r, tn, tv, tn2, tvn, tv2;
        if (w > 0.0) {
            const double lw = std::log(w);
            const double wn = std::pow(w, n);
            const double wnm1 = std::pow(w, n - 1.0);
            r = wn / norm;
            tn = wn * lw / k0;
            tv = wnm1 / k0;
            tn2 = wn * lw * lw / k0;
            tvn = wnm1 * lw / k0;
            tv2 = std::pow(w, n - 2.0) / k0;
        } else {
            // boundary case (k-1)dv == v_th: the stage is zero-width in
            // exposure; rate 0 by continuity, log-carrying sums flagged
            r = tn = tn2 = tvn = 0.0;
            tv = (n == 1.0) ? 1.0 / k0 : (n > 1.0 ? 0.0 : std::numeric_limits<double>::infinity());
            tv2 = (n == 2.0) ? 1.0 / k0 : (n > 2.0 ? 0.0 : std::numeric_limits<double>::infinity());
            if (first_zero_width_ < 0)
                first_zero_width_ = m;
        }
        rate_.push_back(r);
        cum_r_.push_back(cum_r_.back() + r);
        cum_sn_.push_back(cum_sn_.back() + tn);
        cum_sv_.push_back(cum_sv_.back() + tv);
        cum_sn2_.push_back(cum_sn2_.back() + tn2);
        cum_svn_.push_back(cum_svn_.back() + tvn);
        cum_sv2_.push_back(cum_sv2_.back() + tv2);
    }
}

double StageCache::rate(int stage) const {
    if (stage < k_)
        throw ConfigError("stage " + std::to_string(stage) + " is below the first effective stage " +
                          std::to_string(k_));
    ensure(stage);
    return rate_[stage - k_];
}

double StageCache::cum_rate(int stage) const {
    if (stage < k_ - 1)
        throw ConfigError("boundary index " + std::to_string(stage) + " is below k-1");
    ensure(stage);
    return cum_r_[stage - k_ + 1];
}

double StageCache::eps_boundary(int i, double ts) const {
    return eps1(ts) + cum_rate(i);
}

double StageCache::eps_at(double tau, double ts) const {
    if (tau < 0.0 || ts < 0.0)
        throw ConfigError("tau and ts must be nonnegative");
    if (tau <= k_ - 2)
        return eps1(ts);
    // stage containing tau: i-2 < tau <= i-1
    const int i = static_cast<int>(std::ceil(tau)) + 1;
    return eps1(ts) + cum_rate(i - 1) + rate(i) * (tau - (i - 2));
}

double StageCache::log_survival(double tau, double ts) const {
    if (ts < 0.0)
        throw ConfigError("ts must be nonnegative");
    return -pow_increment(eps1(ts), eps_at(tau, 0.0), params_.beta);
}

double StageCache::sum_wn_lnw(int i) const {
    ensure(i);
    return cum_sn_[i - k_ + 1];
}

double StageCache::sum_wnm1(int i) const {
    ensure(i);
    return cum_sv_[i - k_ + 1];
}

double StageCache::sum_wn_ln2w(int i) const {
    ensure(i);
    return cum_sn2_[i - k_ + 1];
}

double StageCache::sum_wnm1_lnw(int i) const {
    ensure(i);
    return cum_svn_[i - k_ + 1];
}

double StageCache::sum_wnm2(int i) const {
    ensure(i);
    return cum_sv2_[i - k_ + 1];
}

bool StageCache::has_zero_width(int i) const {
    ensure(i);
    return first_zero_width_ >= 0 && first_zero_width_ <= i;
}

Exposure exposure(double tau, double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    return Exposure{cache.eps_at(tau, ts)};
}

double cdf_conditional(double tau, double ts, const StageCache& cache) {
    return -std::expm1(cache.log_survival(tau, ts));
}

double cdf_conditional(double tau, double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    return cdf_conditional(tau, ts, cache);
}

double stage_probability(int l, double ts, const StageCache& cache) {
    if (l < cache.k())
        throw ConfigError("stage " + std::to_string(l) + " is below the first effective stage " +
                          std::to_string(cache.k()));
    if (ts < 0.0)
        throw ConfigError("ts must be nonnegative");
    const double beta = cache.params().beta;
    const double log_surv_start = cache.log_survival(l - 2.0, ts);
    const double decay = pow_increment(cache.eps_boundary(l - 1, ts), cache.rate(l), beta);
    if (decay <= 0.0)
        return 0.0;
    return std::exp(log_surv_start) * -std::expm1(-decay);
}

double stage_probability(int l, double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    return stage_probability(l, ts, cache);
}

} // namespace ssce
