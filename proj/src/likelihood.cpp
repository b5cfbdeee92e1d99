#include "ssce/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ssce {

namespace {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

struct ExtSums {
    double sn, sv, sn2, svn, sv2;
};

// Delta-function sums at boundary i with the prior-exposure term included.
ExtSums ext_sums(const StageCache& cache, int i, double ts) {
    const ModelParams& p = cache.params();
    const double pv = 1.0 - p.v_th;
    const double lpv = std::log(pv);
    const double prior_n = std::pow(pv, p.n) * ts / p.k0;
    const double prior_v = std::pow(pv, p.n - 1.0) * ts / p.k0;
    ExtSums s;
    s.sn = cache.sum_wn_lnw(i) + prior_n * lpv;
    s.sv = cache.sum_wnm1(i) + prior_v;
    s.sn2 = cache.sum_wn_ln2w(i) + prior_n * lpv * lpv;
    s.svn = cache.sum_wnm1_lnw(i) + prior_v * lpv;
    s.sv2 = cache.sum_wnm2(i) + std::pow(pv, p.n - 2.0) * ts / p.k0;
    return s;
}

// All four deltas at boundary i. eps == 0 only happens at the conditioning
// boundary with ts = 0, where the prior contribution to the likelihood is
// identically zero in every parameter, so all deltas vanish.
Vec4 deltas_at(const StageCache& cache, int i, double ts) {
    const double beta = cache.params().beta;
    const double e = cache.eps_boundary(i, ts);
    if (e == 0.0)
        return {0.0, 0.0, 0.0, 0.0};
    const ExtSums s = ext_sums(cache, i, ts);
    const double eb = std::pow(e, beta);
    const double ebm1 = std::pow(e, beta - 1.0);
    return {eb * std::log(e), ebm1 * s.sn, eb, ebm1 * s.sv};
}

// Matrix of partial derivatives d(delta_row)/d(theta_col) at boundary i,
// rows and columns ordered (beta, n, zeta, v_th).
Mat4 ddeltas_at(const StageCache& cache, int i, double ts) {
    const ModelParams& p = cache.params();
    const double b = p.beta;
    const double n = p.n;
    const double z = p.zeta;
    const double e = cache.eps_boundary(i, ts);
    Mat4 D{};
    if (e == 0.0)
        return D;
    const ExtSums s = ext_sums(cache, i, ts);
    const double le = std::log(e);
    const double eb = std::pow(e, b);
    const double ebm1 = std::pow(e, b - 1.0);
    const double ebm2 = std::pow(e, b - 2.0);
    const double cn = b / z;
    const double cz = -b / z;
    const double cv = -b * n / z;
    const double d_beta = eb * le;
    const double d_n = ebm1 * s.sn;
    const double d_zeta = eb;
    const double d_v = ebm1 * s.sv;

    D[0][0] = d_beta * le;
    D[0][1] = (cn * le + 1.0 / z) * d_n;
    D[0][2] = (cz * le - 1.0 / z) * d_zeta;
    D[0][3] = (cv * le - n / z) * d_v;

    D[1][0] = d_n * le;
    D[1][1] = (cn - 1.0 / z) * ebm2 * s.sn * s.sn + ebm1 * s.sn2;
    D[1][2] = (cz + 1.0 / z) * d_n;
    D[1][3] = (cv + n / z) * ebm2 * s.sv * s.sn - d_v - n * ebm1 * s.svn;

    D[2][0] = d_beta;
    D[2][1] = cn * d_n;
    D[2][2] = cz * d_zeta;
    D[2][3] = cv * d_v;

    D[3][0] = d_v * le;
    D[3][1] = (cn - 1.0 / z) * ebm2 * s.sn * s.sv + ebm1 * s.svn;
    D[3][2] = (cz + 1.0 / z) * d_v;
    D[3][3] = (cv + n / z) * ebm2 * s.sv * s.sv - (n - 1.0) * ebm1 * s.sv2;
    return D;
}

void check_observation(const Observation& obs, const StageCache& cache, std::size_t row) {
    if (obs.stage_start < 0)
        throw ConfigError("observation " + std::to_string(row) + " has negative stage_start");
    if (obs.ts < 0.0)
        throw ConfigError("observation " + std::to_string(row) + " has negative ts");
    const int l = obs.stage_start + 2;
    if (l < cache.k())
        throw NumericalError("observation " + std::to_string(row) + " (ts=" + std::to_string(obs.ts) +
                             ", stage_start=" + std::to_string(obs.stage_start) +
                             ") fails before the first effective stage k=" + std::to_string(cache.k()) +
                             "; its stage probability is zero");
}

} // namespace

std::size_t Dataset::active_count() const {
    return static_cast<std::size_t>(
        std::count_if(observations.begin(), observations.end(),
                      [](const Observation& o) { return !o.excluded; }));
}

double log_likelihood(const Dataset& data, const ModelParams& params) {
    StageCache cache(params, data.plan);
    const double beta = params.beta;
    double total = 0.0;
    for (std::size_t row = 0; row < data.observations.size(); ++row) {
        const Observation& obs = data.observations[row];
        if (obs.excluded)
            continue;
        check_observation(obs, cache, row);
        const int l = obs.stage_start + 2;
        const double a = std::pow(cache.eps_boundary(l - 1, obs.ts), beta);
        const double b = std::pow(cache.eps_boundary(l, obs.ts), beta);
        if (!(b > a))
            throw NumericalError("observation " + std::to_string(row) +
                                 " falls in a zero-probability stage");
        // ln(e^-a - e^-b) = -a + ln(1 - e^-(b-a)), plus the conditioning term
        const double term = -a + std::log1p(-std::exp(a - b)) + std::pow(cache.eps1(obs.ts), beta);
        if (!std::isfinite(term))
            throw NumericalError("log-likelihood term for observation " + std::to_string(row) +
                                 " is not finite");
        total += term;
    }
    return total;
}

double delta(Theta theta, int boundary_index, double ts, const ModelParams& params,
             const TestPlan& plan) {
    StageCache cache(params, plan);
    if (boundary_index < cache.k() - 1)
        throw ConfigError("boundary index " + std::to_string(boundary_index) +
                          " is below k-1 = " + std::to_string(cache.k() - 1));
    if (ts < 0.0)
        throw ConfigError("ts must be nonnegative");
    const double e = cache.eps_boundary(boundary_index, ts);
    if (theta == Theta::beta && e == 0.0)
        throw NumericalError("delta_beta is singular at eps = 0 (ln 0)");
    if ((theta == Theta::n || theta == Theta::v_th) && cache.has_zero_width(boundary_index))
        throw NumericalError("a stage in the sum sits exactly on the threshold; "
                             "delta_n/delta_v_th are singular there");
    const Vec4 d = deltas_at(cache, boundary_index, ts);
    const double value = d[static_cast<int>(theta)];
    if (!std::isfinite(value))
        throw NumericalError("delta evaluated to a non-finite value");
    return value;
}

ScoreVector score_equations(const Dataset& data, const ModelParams& params) {
    StageCache cache(params, data.plan);
    const double beta = params.beta;
    Vec4 total{0.0, 0.0, 0.0, 0.0};
    for (std::size_t row = 0; row < data.observations.size(); ++row) {
        const Observation& obs = data.observations[row];
        if (obs.excluded)
            continue;
        check_observation(obs, cache, row);
        const int l = obs.stage_start + 2;
        const double a = std::pow(cache.eps_boundary(l - 1, obs.ts), beta);
        const double b = std::pow(cache.eps_boundary(l, obs.ts), beta);
        const double E = std::exp(a - b);
        if (E >= 1.0)
            throw NumericalError("observation " + std::to_string(row) +
                                 " falls in a zero-width stage (E = 1)");
        const Vec4 dl = deltas_at(cache, l - 1, obs.ts);
        const Vec4 du = deltas_at(cache, l, obs.ts);
        const Vec4 d1 = deltas_at(cache, cache.k() - 1, obs.ts);
        for (int t = 0; t < 4; ++t)
            total[t] += (-dl[t] + du[t] * E) / (1.0 - E) + d1[t];
    }
    for (double v : total)
        if (!std::isfinite(v))
            throw NumericalError("score equations evaluated to a non-finite value");
    return total;
}

ScoreJacobian score_jacobian(const Dataset& data, const ModelParams& params) {
    StageCache cache(params, data.plan);
    const double beta = params.beta;
    const Vec4 C{1.0, beta / params.zeta, -beta / params.zeta, -beta * params.n / params.zeta};
    Mat4 J{};
    for (std::size_t row = 0; row < data.observations.size(); ++row) {
        const Observation& obs = data.observations[row];
        if (obs.excluded)
            continue;
        check_observation(obs, cache, row);
        const int l = obs.stage_start + 2;
        const double a = std::pow(cache.eps_boundary(l - 1, obs.ts), beta);
        const double b = std::pow(cache.eps_boundary(l, obs.ts), beta);
        const double E = std::exp(a - b);
        if (E >= 1.0)
            throw NumericalError("observation " + std::to_string(row) +
                                 " falls in a zero-width stage (E = 1)");
        const Vec4 dl = deltas_at(cache, l - 1, obs.ts);
        const Vec4 du = deltas_at(cache, l, obs.ts);
        const Mat4 Dl = ddeltas_at(cache, l - 1, obs.ts);
        const Mat4 Du = ddeltas_at(cache, l, obs.ts);
        const Mat4 D1 = ddeltas_at(cache, cache.k() - 1, obs.ts);
        Vec4 R;
        for (int t = 0; t < 4; ++t)
            R[t] = (-dl[t] + du[t] * E) / (1.0 - E);
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                const double low = Dl[r][c] - dl[r] * C[c] * dl[c];
                const double up = Du[r][c] - du[r] * C[c] * du[c];
                J[r][c] += -R[r] * C[c] * R[c] + (-low + up * E) / (1.0 - E) + D1[r][c];
            }
        }
    }
    for (const auto& r : J)
        for (double v : r)
            if (!std::isfinite(v))
                throw NumericalError("score Jacobian evaluated to a non-finite value");
    return J;
}

} // namespace ssce
