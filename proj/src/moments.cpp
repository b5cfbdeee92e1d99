#include "ssce/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssce/quadrature.hpp"

namespace ssce {

namespace {

constexpr double survival_cutoff = 1e-16;
constexpr int stage_cap = 1'000'000;

double laguerre_weighted(const std::function<double(double)>& f, const char* label) {
    const QuadratureResult q = integrate_doubling(f, gauss_laguerre);
    if (!q.converged)
        throw QuadratureError(std::string(label) + " quadrature did not converge within " +
                                  std::to_string(q.nodes) + " nodes (estimate " +
                                  std::to_string(q.value) + ", bound " +
                                  std::to_string(q.error_bound) + ")",
                              q.value, q.error_bound, q.nodes);
    return q.value;
}

// Both per-stage integrals at once:
//   s0 = Int_{i-2}^{i-1} exp(eb1 - eps(t)^beta) dt
//   s1 = Int_{i-2}^{i-1} 2 t exp(eb1 - eps(t)^beta) dt
// These equal (1/(beta r_i)) (A(tau_{i-1}) - A(tau_i)) and the matching
// B-difference term. Node-doubling Gauss-Legendre on the unit stage.
struct StageTerms {
    double s0, s1;
    int nodes;
};

StageTerms stage_terms(const StageCache& cache, int i, double ts) {
    const double beta = cache.params().beta;
    const double lo = i - 2.0;
    const double eps1 = cache.eps1(ts);
    const double cum = cache.cum_rate(i - 1); // in-test exposure at the stage start
    const double el = eps1 + cum;
    const double ri = cache.rate(i);

    // Log survival at the stage start, and the within-stage decay
    // d(x) = (el + x)^beta - el^beta; both via pow_increment so the exponent
    // keeps full relative precision even when el^beta is ~1e8 and the decay
    // across the stage is ~10.
    const double log_surv_start = -pow_increment(eps1, cum, beta);
    const double decay_end = pow_increment(el, ri, beta);

    // When a single stage spans more than exponent_cap e-folds of survival
    // decay, the integrand is a boundary layer at the stage start that no
    // fixed-order rule resolves. Clip the interval where the decay reaches
    // exp(-exponent_cap); the discarded tail is below 1e-50 of the kept mass.
    constexpr double exponent_cap = 120.0;
    double width = 1.0;
    if (ri > 0.0 && decay_end > exponent_cap) {
        const double layer =
            el > 0.0 ? el * std::expm1(std::log1p(exponent_cap / std::pow(el, beta)) / beta)
                     : std::pow(exponent_cap, 1.0 / beta);
        width = std::min(1.0, layer / ri);
    }

    StageTerms out{0.0, 0.0, 0};
    double prev0 = 0.0, prev1 = 0.0;
    for (int n = quad_start_nodes;; n *= 2) {
        const QuadratureRule& rule = gauss_legendre(n);
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
            // Offset into the stage, mapped from [-1,1] to [0, width]. Kept
            // separate from lo: forming lo + x and subtracting back would
            // truncate a narrow boundary layer to a handful of digits.
            const double x = 0.5 * width * (rule.nodes[j] + 1.0);
            const double s = std::exp(log_surv_start - pow_increment(el, ri * x, beta));
            s0 += rule.weights[j] * s;
            s1 += rule.weights[j] * 2.0 * (lo + x) * s;
        }
        s0 *= 0.5 * width; // half-width of the integration interval
        s1 *= 0.5 * width;
        out.s0 = s0;
        out.s1 = s1;
        out.nodes = n;
        if (n > quad_start_nodes) {
            const double d0 = std::abs(s0 - prev0);
            const double d1 = std::abs(s1 - prev1);
            if (d0 <= quad_rel_tol * std::max(std::abs(s0), 1e-300) &&
                d1 <= quad_rel_tol * std::max(std::abs(s1), 1e-300))
                return out;
        }
        if (n >= quad_max_nodes)
            throw QuadratureError("stage moment integral did not converge within " +
                                      std::to_string(n) + " nodes",
                                  s0, std::abs(s0 - prev0), n);
        prev0 = s0;
        prev1 = s1;
    }
}

} // namespace

double a_func(double tau, double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    if (!(tau >= cache.k() - 2))
        throw ConfigError("a_func requires tau >= k-2");
    const double beta = params.beta;
    const double eb = std::pow(cache.eps_at(tau, ts), beta);
    const double p = 1.0 / beta - 1.0;
    const double integral =
        laguerre_weighted([&](double u) { return std::pow(u + eb, p); }, "a_func");
    return std::exp(cache.log_survival(tau, ts)) * integral;
}

double b_func(int i, double tau, double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    if (i < cache.k())
        throw ConfigError("b_func requires i >= k");
    if (!(tau >= i - 2 && tau <= i - 1))
        throw ConfigError("b_func requires tau in [i-2, i-1]");
    const double beta = params.beta;
    const double eb = std::pow(cache.eps_at(tau, ts), beta);
    const double c = cache.eps_boundary(i - 1, ts) - (i - 2) * cache.rate(i);
    const double p = 1.0 / beta - 1.0;
    const double integral = laguerre_weighted(
        [&](double u) {
            const double base = u + eb;
            return (std::pow(base, 1.0 / beta) - c) * std::pow(base, p);
        },
        "b_func");
    return std::exp(cache.log_survival(tau, ts)) * integral;
}

MomentResult moments(double ts, const ModelParams& params, const TestPlan& plan) {
    StageCache cache(params, plan);
    if (ts < 0.0)
        throw ConfigError("ts must be nonnegative");
    const int k = cache.k();

    MomentResult out;
    out.mean_norm = k - 2.0;
    out.second_norm = (k - 2.0) * (k - 2.0);

    int i = k;
    for (;; ++i) {
        if (i - k >= stage_cap)
            throw NumericalError("moment series not truncated within " + std::to_string(stage_cap) +
                                 " stages (partial mean " + std::to_string(out.mean_norm) + ")");
        const StageTerms terms = stage_terms(cache, i, ts);
        out.mean_norm += terms.s0;
        out.second_norm += terms.s1;
        out.quadrature_nodes = std::max(out.quadrature_nodes, terms.nodes);
        const double survival = std::exp(cache.log_survival(i - 1.0, ts));
        if (survival < survival_cutoff)
            break;
    }
    out.stages_used = i - k + 1;

    const double var = out.second_norm - out.mean_norm * out.mean_norm;
    const double scale = std::max(out.mean_norm * out.mean_norm, 1.0);
    if (var < -1e-12 * scale)
        throw NumericalError("negative variance " + std::to_string(var) + " in moment evaluation");
    out.sd_norm = std::sqrt(std::max(var, 0.0));
    return out;
}

double mean_norm(double ts, const ModelParams& params, const TestPlan& plan) {
    return moments(ts, params, plan).mean_norm;
}

double second_norm(double ts, const ModelParams& params, const TestPlan& plan) {
    return moments(ts, params, plan).second_norm;
}

std::vector<CurveRow> curve(const std::vector<double>& ts_grid, const ModelParams& params,
                            const TestPlan& plan) {
    if (ts_grid.empty())
        throw ConfigError("curve grid must be nonempty");
    std::vector<CurveRow> rows;
    rows.reserve(ts_grid.size());
    for (double ts : ts_grid)
        rows.push_back(CurveRow{ts, moments(ts, params, plan)});
    return rows;
}

} // namespace ssce
