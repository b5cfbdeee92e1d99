// Acceptance gate: one pass/fail line per criterion, nonzero exit if any
// fails. Each check is self-contained and uses independent oracles (hand
// formulas, quadrature, Monte Carlo) rather than the library's own output.

#include "ssce/cli.hpp"
#include "ssce/estimator.hpp"
#include "ssce/io.hpp"
#include "ssce/model.hpp"
#include "ssce/moments.hpp"
#include "ssce/rng.hpp"
#include "ssce/simulate.hpp"

#include <nlohmann/json.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ssce;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string data_path = SSCE_DATA_DIR "/table2.csv";
const ModelParams golden{5.016811675074882, 1.6038754972165012, 0.5482371203515761,
                         0.9440540287911319, 1e4};

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / ("ssce_acceptance_" + name)).string();
}

bool rel_ok(double got, double want, double tol) {
    return std::fabs(got - want) <= tol * std::fabs(want);
}

// ---------------------------------------------------------------- criterion 1

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string out = tmp_path("fit.json");
    const int code = run_cli({"fit", "--data", data_path, "--out", out});
    const double secs = elapsed_s(t0);
    bool ok = code == exit_ok && secs < 60.0;
    std::ostringstream detail;
    if (!ok) {
        detail << "fit exit=" << code << " (" << secs << " s)";
    } else {
        json doc;
        std::ifstream in(out);
        in >> doc;
        const double b = doc["beta"], n = doc["n"], z = doc["zeta"], v = doc["v_th"];
        const double ll = doc["loglik"];
        ok = rel_ok(b, 5.016812, 1e-3) && rel_ok(n, 1.603875, 1e-3) &&
             rel_ok(z, 0.548237, 1e-3) && rel_ok(v, 0.944054, 1e-3) &&
             std::fabs(ll + 244.4626) <= 1e-3 && doc["converged"].get<bool>();
        detail << "fit (" << b << ", " << n << ", " << z << ", " << v << "), lnL=" << ll << ", "
               << secs << " s";
    }
    report(1, ok, "golden fit on the bundled data: " + detail.str());
}

// ---------------------------------------------------------------- criterion 2

void criterion_2() {
    const Dataset data = read_dataset(data_path);
    const TestPlan plan = data.plan;
    struct Group {
        double ts;
        std::vector<double> edges;
        std::vector<int> m;
        std::vector<double> p;
        double t_stat;
    };
    const std::vector<Group> groups = {
        {788400.0, {12, 14}, {3, 4, 2}, {0.122186, 0.067105, 0.810709}, 26.22508},
        {946080.0, {16, 18}, {3, 3, 3}, {0.479264, 0.125719, 0.395017}, 3.572318},
        {998640.0, {11, 12, 13}, {3, 3, 2, 3}, {0.225639, 0.059853, 0.064528, 0.649980},
         13.19004}};
    bool ok = true;
    std::ostringstream detail;
    for (const auto& g : groups) {
        const auto counts = bin_counts(data, g.ts, g.edges);
        const auto probs = group_probabilities(g.ts, golden, plan, g.edges);
        int n_d = 0;
        for (int m : counts) n_d += m;
        const double t = chi_square_stat(counts, probs, n_d);
        bool g_ok = counts == g.m && std::fabs(t - g.t_stat) <= 1e-3;
        for (std::size_t j = 0; j < probs.size(); ++j)
            g_ok = g_ok && std::fabs(probs[j] - g.p[j]) <= 1e-4;
        ok = ok && g_ok;
        detail << " ts=" << g.ts << " T=" << t << (g_ok ? "" : " MISMATCH");
    }
    report(2, ok, "reference group probabilities, counts, statistics:" + detail.str());
}

// ---------------------------------------------------------------- criterion 3

// Three-case ordering of the conditional CDF in the prior exposure (fixed
// tau): beta > 1 means more prior wear fails sooner (strictly larger CDF),
// beta = 1 is memoryless, beta < 1 reverses. The prior-stress analogue: a
// higher in-service stress s > 1 multiplies the prior exposure term by
// ((s - v_th)/(1 - v_th))^n > 1, so the same three cases apply to that boost.
void criterion_3() {
    int tuples = 0, violations = 0;
    const TestPlan plan;
    std::mt19937_64 rng(31415);
    std::uniform_real_distribution<double> u_n(0.8, 3.0), u_zeta(0.05, 2.0), u_vth(0.0, 0.93),
        u_tau(0.3, 30.0), u_ts(1e3, 2e6), u_stress(1.05, 1.5);

    // The ordering is checked on the log-survival scale, a strictly
    // decreasing transform of the CDF, so "G_b > G_a" becomes "ls_b < ls_a".
    // On the CDF scale itself both values round to exactly 1.0 once the
    // exposure is large, destroying strictness that holds in exact
    // arithmetic; the log scale never saturates over this grid. Where the
    // CDFs are representable away from 0 and 1 the literal form is checked
    // too.
    const auto check_pair = [&](const ModelParams& p, double tau, double ts_a, double ts_b) {
        const StageCache cache(p, plan);
        const double lsa = cache.log_survival(tau, ts_a);
        const double lsb = cache.log_survival(tau, ts_b);
        ++tuples;
        if (p.beta > 1.0 && !(lsb < lsa)) ++violations;
        if (p.beta < 1.0 && !(lsb > lsa)) ++violations;
        if (p.beta == 1.0 && std::fabs(lsb - lsa) > 1e-12 * std::fabs(lsa)) ++violations;

        const double ga = cdf_conditional(tau, ts_a, p, plan);
        const double gb = cdf_conditional(tau, ts_b, p, plan);
        if (std::max(ga, gb) < 1.0 - 1e-9 && std::min(ga, gb) > 1e-290) {
            if (p.beta > 1.0 && !(gb > ga)) ++violations;
            if (p.beta < 1.0 && !(gb < ga)) ++violations;
        }
    };

    for (double beta : {0.5, 1.0, 2.0, 3.0, 5.0}) {
        for (int trial = 0; trial < 48; ++trial) {
            const ModelParams p{beta, u_n(rng), u_zeta(rng), u_vth(rng), 1e4};
            const int k = first_effective_stage(p, plan);
            const double tau = (k - 2) + u_tau(rng);

            // Lemma-1 tuple: two prior exposure times at the same stress.
            double ts_a = u_ts(rng), ts_b = u_ts(rng);
            if (ts_a > ts_b) std::swap(ts_a, ts_b);
            if (ts_b - ts_a < 1.0) ts_b += 10.0;
            check_pair(p, tau, ts_a, ts_b);

            // Prior-stress tuple: same prior time at a higher stress, which
            // enters as a multiplicative boost > 1 on the exposure term.
            const double s = u_stress(rng);
            const double factor = std::pow((s - p.v_th) / (1.0 - p.v_th), p.n);
            if (factor > 1.0) check_pair(p, tau, ts_a, ts_a * factor);
        }
    }
    std::ostringstream detail;
    detail << tuples << " ordered tuples over beta in {0.5,1,2,3,5}, " << violations
           << " violations";
    report(3, tuples >= 200 && violations == 0, "stochastic-ordering lemma suite: " + detail.str());
}

// ---------------------------------------------------------------- criterion 4

struct SurvivalOracle {
    double mean;
    double second;
};

SurvivalOracle survival_oracle(double ts, const ModelParams& params, const TestPlan& plan) {
    const StageCache cache(params, plan);
    const int k = cache.k();
    boost::math::quadrature::tanh_sinh<double> integrator;
    double mean = k - 2.0, second = (k - 2.0) * (k - 2.0);
    for (int stage = k;; ++stage) {
        const double lo = stage - 2.0, hi = stage - 1.0;
        const auto surv = [&](double t) { return std::exp(cache.log_survival(t, ts)); };
        mean += integrator.integrate(surv, lo, hi);
        second += integrator.integrate([&](double t) { return 2.0 * t * surv(t); }, lo, hi);
        if (surv(hi) < 1e-15) break;
        if (stage > k + 100000) break;
    }
    return {mean, second};
}

void criterion_4() {
    const TestPlan plan_t1{0.39};
    std::vector<std::pair<ModelParams, TestPlan>> points;
    // A spread across the reference parameter grid: every beta/n pairing,
    // cycling through the K and v_th levels.
    int pick = 0;
    for (double beta : {2.0, 3.0})
        for (double n : {1.0, 2.0, 3.0})
            for (double k_tilde : {1e3, 1e4, 1e5})
                for (double v_th : {0.0, 0.5, 0.9}) {
                    if (pick++ % 2 == 0)
                        points.push_back({ModelParams{beta, n, k_tilde / 1e4, v_th, 1e4}, plan_t1});
                }
    points.push_back({golden, TestPlan{}});

    std::mt19937_64 rng(905);
    std::uniform_real_distribution<double> u_ts(1e3, 3e6);
    bool ok = true;
    int checked = 0;
    std::ostringstream detail;
    double worst_rel = 0.0, worst_z = 0.0;
    for (const auto& [params, plan] : points) {
        const double ts = u_ts(rng);
        const MomentResult m = moments(ts, params, plan);
        const SurvivalOracle o = survival_oracle(ts, params, plan);
        const double rel_mean = std::fabs(m.mean_norm - o.mean) / o.mean;
        const double rel_second = std::fabs(m.second_norm - o.second) / o.second;
        worst_rel = std::max({worst_rel, rel_mean, rel_second});
        if (rel_mean > 1e-6 || rel_second > 1e-6) ok = false;
        ++checked;
    }

    // Monte Carlo oracle, 1e6 draws per point. Raw moments up to t^4 give the
    // standard errors of both the mean and the second moment in one pass.
    std::mt19937_64 mc(777);
    int mc_points = 0;
    for (const auto& [params, plan] : points) {
        const double ts = 1.7e5;
        const StageCache cache(params, plan);
        const int n_draw = 1000000;
        double s1 = 0.0, s2 = 0.0, s4 = 0.0;
        for (int i = 0; i < n_draw; ++i) {
            const double t = sample_failure_time(ts, cache, open_unit(mc));
            const double t2 = t * t;
            s1 += t;
            s2 += t2;
            s4 += t2 * t2;
        }
        const double mc_mean = s1 / n_draw;
        const double mc_second = s2 / n_draw;
        const double mc_fourth = s4 / n_draw;
        const MomentResult m = moments(ts, params, plan);
        const double se_mean = std::sqrt((mc_second - mc_mean * mc_mean) / n_draw);
        const double se_second =
            std::sqrt((mc_fourth - mc_second * mc_second) / n_draw);
        const double z_mean = std::fabs(m.mean_norm - mc_mean) / se_mean;
        const double z_second = std::fabs(m.second_norm - mc_second) / se_second;
        worst_z = std::max({worst_z, z_mean, z_second});
        if (z_mean > 3.0 || z_second > 3.0) ok = false;
        ++mc_points;
    }

    // Shape properties along ts.
    const std::vector<double> ts_grid = {1e3, 1e4, 1e5, 5e5, 1e6, 3e6};
    {
        const ModelParams b2{2.0, 2.0, 1.0, 0.5, 1e4};
        double prev = 1e300;
        for (double ts : ts_grid) {
            const double m = moments(ts, b2, plan_t1).mean_norm;
            if (m > prev + 1e-10) ok = false;
            prev = m;
        }
        const ModelParams b1{1.0, 2.0, 1.0, 0.5, 1e4};
        const double ref = moments(ts_grid[0], b1, plan_t1).mean_norm;
        for (double ts : ts_grid)
            if (std::fabs(moments(ts, b1, plan_t1).mean_norm - ref) > 1e-9 * ref) ok = false;
    }

    detail << checked << " grid points vs quadrature (worst rel " << worst_rel << "), "
           << mc_points << " points vs 1e6-draw MC (worst z " << worst_z
           << "), monotone/constant shape checks";
    report(4, ok, "moment oracles: " + detail.str());
}

// ---------------------------------------------------------------- criterion 5

void criterion_5() {
    const Dataset data = read_dataset(data_path);
    std::mt19937_64 rng(6021);
    std::uniform_real_distribution<double> u_beta(3.5, 6.0), u_n(1.2, 2.2), u_zeta(0.35, 0.85),
        u_vth(0.89, 0.97);
    bool ok = true;
    double worst_beta = 0.0, worst_jac = 0.0;
    for (int point = 0; point < 10; ++point) {
        const ModelParams p{u_beta(rng), u_n(rng), u_zeta(rng), u_vth(rng), 1e4};

        // beta component of the equations vs FD of ln L
        const double h_b = 1e-6 * std::max(1.0, p.beta);
        ModelParams lo = p, hi = p;
        lo.beta -= h_b;
        hi.beta += h_b;
        const double fd_beta =
            (log_likelihood(data, hi) - log_likelihood(data, lo)) / (2.0 * h_b);
        const double s_beta = score_equations(data, p)[0];
        const double rel_b =
            std::fabs(s_beta - fd_beta) / std::max(1e-12, std::fabs(fd_beta));
        worst_beta = std::max(worst_beta, rel_b);
        if (rel_b > 1e-5) ok = false;

        // all 16 Jacobian entries vs FD of the equations
        const ScoreJacobian jac = score_jacobian(data, p);
        for (int t = 0; t < 4; ++t) {
            ModelParams plo = p, phi = p;
            double* lo_field = t == 0 ? &plo.beta : t == 1 ? &plo.n : t == 2 ? &plo.zeta : &plo.v_th;
            double* hi_field = t == 0 ? &phi.beta : t == 1 ? &phi.n : t == 2 ? &phi.zeta : &phi.v_th;
            const double base = *hi_field;
            const double h = 1e-6 * std::max(1.0, std::fabs(base));
            *lo_field -= h;
            *hi_field += h;
            const ScoreVector flo = score_equations(data, plo);
            const ScoreVector fhi = score_equations(data, phi);
            for (int e = 0; e < 4; ++e) {
                const double fd = (fhi[e] - flo[e]) / (2.0 * h);
                const double scale = std::max({1.0, std::fabs(fd), std::fabs(jac[e][t])});
                const double rel = std::fabs(jac[e][t] - fd) / scale;
                worst_jac = std::max(worst_jac, rel);
                if (rel > 1e-5) ok = false;
            }
        }
    }
    std::ostringstream detail;
    detail << "10 interior points; worst beta-gradient rel err " << worst_beta
           << ", worst Jacobian rel err " << worst_jac;
    report(5, ok, "derivative suite vs finite differences: " + detail.str());
}

// ---------------------------------------------------------------- criterion 6

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = read_dataset(data_path);
    const DesignTemplate tmpl = template_from_dataset(data);
    const StageCache cache(golden, data.plan);
    bool ok = true;
    double worst = 0.0;
    std::mt19937_64 rng(112233);
    for (const auto& row : tmpl.rows) {
        std::map<int, double> freq;
        const int n = 100000;
        for (int i = 0; i < n; ++i) freq[sample_failure(row.ts, cache, open_unit(rng))] += 1.0 / n;
        for (const auto& [v, f] : freq) {
            const double diff = std::fabs(f - stage_probability(v + 2, row.ts, cache));
            worst = std::max(worst, diff);
        }
    }
    const double secs = elapsed_s(t0);
    if (worst >= 0.01 || secs >= 10.0) ok = false;
    std::ostringstream detail;
    detail << tmpl.rows.size() << " ts values x 1e5 draws, worst |freq - prob| = " << worst << ", "
           << secs << " s";
    report(6, ok, "sampler fidelity: " + detail.str());
}

// ---------------------------------------------------------------- criterion 7

void criterion_7() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string out = tmp_path("gof1000.json");
    const std::string golden_str =
        "5.016811675074882,1.6038754972165012,0.5482371203515761,0.9440540287911319";
    const int code = run_cli({"gof", "--data", data_path, "--params", golden_str, "--bins",
                              R"({"788400":[12,14],"946080":[16,18],"998640":[11,12,13]})",
                              "--replicates", "1000", "--seed", "0", "--out", out});
    const double secs = elapsed_s(t0);
    bool ok = code == exit_ok && secs < 1800.0;
    std::ostringstream detail;
    if (!ok) {
        detail << "gof exit=" << code << " (" << secs << " s)";
    } else {
        json doc;
        std::ifstream in(out);
        in >> doc;
        const auto& boot = doc["bootstrap"];
        const int failed = boot["failed_fits"];
        const int simul = boot["simultaneous_exceed"];
        const auto& bias = boot["bias"];
        const auto& var = boot["variance"];
        const double zb = std::fabs(bias["zeta"].get<double>());
        const bool zeta_bias_max = zb > std::fabs(bias["beta"].get<double>()) &&
                                   zb > std::fabs(bias["n"].get<double>()) &&
                                   zb > std::fabs(bias["v_th"].get<double>());
        const double zv = var["zeta"].get<double>();
        const bool zeta_var_max = zv > var["beta"].get<double>() && zv > var["n"].get<double>() &&
                                  zv > var["v_th"].get<double>();
        ok = simul <= 3 && failed >= 50 && failed <= 400 && zeta_bias_max && zeta_var_max;
        detail << "simultaneous=" << simul << ", failed=" << failed << ", zeta bias "
               << bias["zeta"].get<double>() << " / var " << zv
               << (zeta_bias_max && zeta_var_max ? " (largest of the four)" : " (NOT largest)")
               << ", " << secs << " s";
    }
    report(7, ok, "1000-replicate bootstrap goodness of fit: " + detail.str());
}

// ---------------------------------------------------------------- criterion 8

void criterion_8() {
    bool ok = true;
    std::ostringstream detail;

    // simulate: byte-identical across runs
    const std::string tmpl_path = tmp_path("tmpl.csv");
    {
        std::ofstream out(tmpl_path);
        out << "ts_tilde,count\n157680,10\n946080,12\n";
    }
    const std::string sim_a = tmp_path("sim_a.csv"), sim_b = tmp_path("sim_b.csv");
    const std::string golden_str =
        "5.016811675074882,1.6038754972165012,0.5482371203515761,0.9440540287911319";
    ok = ok &&
         run_cli({"simulate", "--params", golden_str, "--template", tmpl_path, "--seed", "42",
                  "--out", sim_a}) == exit_ok &&
         run_cli({"simulate", "--params", golden_str, "--template", tmpl_path, "--seed", "42",
                  "--out", sim_b}) == exit_ok;
    const auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream body;
        body << in.rdbuf();
        return body.str();
    };
    const bool identical = ok && slurp(sim_a) == slurp(sim_b);
    ok = ok && identical;
    detail << "simulate outputs " << (identical ? "byte-identical" : "DIFFER");

    // gof: identical counts across runs and thread counts
    const Dataset data = read_dataset(data_path);
    const DesignTemplate tmpl = template_from_dataset(data);
    BinSpec bins;
    bins.edges_by_ts = {{788400.0, {12.0, 14.0}},
                        {946080.0, {16.0, 18.0}},
                        {998640.0, {11.0, 12.0, 13.0}}};
    FitConfig fit_config;
    fit_config.init = {golden.beta, golden.n, golden.zeta, golden.v_th};
    fit_config.profile_start = 0.85;
    fit_config.max_iter = 8000;

    GofOptions opt;
    opt.replicates = 60;
    opt.seed = 9;
    opt.refit = false;
    opt.threads = 1;
    const GofReport r1 = gof_monte_carlo(data, golden, bins, tmpl, fit_config, opt);
    const GofReport r1b = gof_monte_carlo(data, golden, bins, tmpl, fit_config, opt);
    opt.threads = 4;
    const GofReport r4 = gof_monte_carlo(data, golden, bins, tmpl, fit_config, opt);

    opt.threads = 1;
    opt.refit = true;
    opt.replicates = 4;
    const GofReport q1 = gof_monte_carlo(data, golden, bins, tmpl, fit_config, opt);
    opt.threads = 2;
    const GofReport q2 = gof_monte_carlo(data, golden, bins, tmpl, fit_config, opt);

    const bool gof_same = r1.exceed_counts == r1b.exceed_counts &&
                          r1.exceed_counts == r4.exceed_counts &&
                          r1.simultaneous_exceed == r4.simultaneous_exceed &&
                          q1.exceed_counts == q2.exceed_counts &&
                          q1.failed_fits == q2.failed_fits && q1.bias == q2.bias &&
                          q1.variance == q2.variance;
    ok = ok && gof_same;
    detail << "; gof counts across reruns and 1/2/4 threads "
           << (gof_same ? "identical" : "DIFFER");
    report(8, ok, "determinism: " + detail.str());
}

} // namespace

int main() {
    std::printf("acceptance gate (data: %s)\n", data_path.c_str());
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
