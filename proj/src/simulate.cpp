#include "ssce/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "ssce/errors.hpp"
#include "ssce/rng.hpp"

namespace ssce {

int DesignTemplate::total() const {
    int n = 0;
    for (const auto& row : rows) n += row.count;
    return n;
}

void DesignTemplate::validate() const {
    if (rows.empty()) throw ConfigError("design template has no rows");
    for (const auto& row : rows) {
        if (!(row.ts >= 0.0) || !std::isfinite(row.ts))
            throw ConfigError("design template: ts_tilde must be finite and nonnegative");
        if (row.count < 1) throw ConfigError("design template: count must be at least 1");
    }
}

void BinSpec::validate() const {
    if (edges_by_ts.empty()) throw ConfigError("bin spec has no ts entries");
    for (const auto& [ts, edges] : edges_by_ts) {
        if (!(ts >= 0.0) || !std::isfinite(ts))
            throw ConfigError("bin spec: ts_tilde must be finite and nonnegative");
        if (edges.empty())
            throw ConfigError("bin spec: need at least one upper edge (two bins)");
        double prev = -1.0;
        for (double e : edges) {
            if (!std::isfinite(e) || e < 0.0)
                throw ConfigError("bin spec: edges must be finite and nonnegative");
            if (e <= prev)
                throw ConfigError("bin spec: edges must be strictly increasing");
            prev = e;
        }
    }
}

namespace {

// Stable q - eps1 from -ln(1-u) without forming q when eps1 dominates.
double quantile_minus_eps1(const StageCache& cache, double ts, double u) {
    if (!(u > 0.0) || !(u < 1.0)) throw ConfigError("uniform draw must lie in (0,1)");
    const double x = -std::log1p(-u);
    const double eps1 = cache.eps1(ts);
    const double beta = cache.params().beta;
    if (eps1 == 0.0) return std::pow(x, 1.0 / beta);
    const double eb1 = std::pow(eps1, beta);
    return eps1 * std::expm1(std::log1p(x / eb1) / beta);
}

int sample_stage(const StageCache& cache, double ts, double u) {
    const double target = quantile_minus_eps1(cache, ts, u);
    int i = cache.k();
    while (cache.cum_rate(i) < target) ++i;
    return i;
}

} // namespace

int sample_failure(double ts, const StageCache& cache, double u) {
    return sample_stage(cache, ts, u) - 2;
}

int sample_failure(double ts, const ModelParams& params, const TestPlan& plan, double u) {
    StageCache cache(params, plan);
    return sample_failure(ts, cache, u);
}

double sample_failure_time(double ts, const StageCache& cache, double u) {
    const double target = quantile_minus_eps1(cache, ts, u);
    const int i = sample_stage(cache, ts, u);
    const double lo = static_cast<double>(i - 2);
    const double rate = cache.rate(i);
    if (rate == 0.0) return lo;
    double tau = lo + (target - cache.cum_rate(i - 1)) / rate;
    return std::clamp(tau, lo, lo + 1.0);
}

Dataset generate_dataset(const DesignTemplate& tmpl, const ModelParams& params,
                         const TestPlan& plan, std::uint64_t seed) {
    tmpl.validate();
    params.validate();
    plan.validate();
    Dataset out;
    out.plan = plan;
    out.observations.reserve(static_cast<std::size_t>(tmpl.total()));
    std::mt19937_64 rng(seed);
    StageCache cache(params, plan);
    for (const auto& row : tmpl.rows) {
        for (int c = 0; c < row.count; ++c) {
            const double u = open_unit(rng);
            out.observations.push_back(Observation{row.ts, sample_failure(row.ts, cache, u), false});
        }
    }
    return out;
}

DesignTemplate template_from_dataset(const Dataset& data) {
    std::map<double, int> counts;
    for (const auto& obs : data.observations)
        if (!obs.excluded) ++counts[obs.ts];
    DesignTemplate tmpl;
    tmpl.rows.reserve(counts.size());
    for (const auto& [ts, count] : counts) tmpl.rows.push_back({ts, count});
    return tmpl;
}

std::vector<double> group_probabilities(double ts, const ModelParams& params, const TestPlan& plan,
                                        const std::vector<double>& edges) {
    if (edges.empty()) throw ConfigError("group_probabilities: need at least one edge");
    for (std::size_t j = 0; j < edges.size(); ++j) {
        if (!std::isfinite(edges[j]) || edges[j] < 0.0)
            throw ConfigError("group_probabilities: edges must be finite and nonnegative");
        if (j > 0 && edges[j] <= edges[j - 1])
            throw ConfigError("group_probabilities: edges must be strictly increasing");
    }
    StageCache cache(params, plan);
    std::vector<double> log_surv(edges.size());
    for (std::size_t j = 0; j < edges.size(); ++j)
        log_surv[j] = cache.log_survival(edges[j], ts);

    std::vector<double> probs(edges.size() + 1);
    probs.front() = -std::expm1(log_surv.front());
    for (std::size_t j = 1; j < edges.size(); ++j)
        probs[j] = std::exp(log_surv[j - 1]) * -std::expm1(log_surv[j] - log_surv[j - 1]);
    probs.back() = std::exp(log_surv.back());
    return probs;
}

std::vector<int> bin_counts(const Dataset& data, double ts, const std::vector<double>& edges) {
    if (edges.empty()) throw ConfigError("bin_counts: need at least one edge");
    std::vector<int> counts(edges.size() + 1, 0);
    for (const auto& obs : data.observations) {
        if (obs.excluded || obs.ts != ts) continue;
        const double v = static_cast<double>(obs.stage_start);
        std::size_t bin = edges.size();
        for (std::size_t j = 0; j < edges.size(); ++j) {
            if (v <= edges[j]) {
                bin = j;
                break;
            }
        }
        ++counts[bin];
    }
    return counts;
}

double chi_square_stat(const std::vector<int>& counts, const std::vector<double>& probs, int n_d) {
    if (counts.size() != probs.size())
        throw ConfigError("chi_square_stat: counts and probabilities differ in length");
    int total = 0;
    for (int m : counts) {
        if (m < 0) throw ConfigError("chi_square_stat: negative count");
        total += m;
    }
    if (total != n_d) throw ConfigError("chi_square_stat: counts do not total n_d");
    if (n_d <= 0) throw ConfigError("chi_square_stat: n_d must be positive");
    double t = 0.0;
    for (std::size_t j = 0; j < counts.size(); ++j) {
        const double np = n_d * probs[j];
        if (np <= 0.0) {
            if (counts[j] > 0)
                throw NumericalError("chi_square_stat: occupied bin has zero model probability");
            continue;
        }
        const double d = counts[j] - np;
        t += d * d / np;
    }
    return t;
}

namespace {

struct ReplicateRecord {
    bool success = false;
    std::array<double, 4> theta{};
    std::vector<double> stats;
};

} // namespace

GofReport gof_monte_carlo(const Dataset& data, const ModelParams& fitted, const BinSpec& bins,
                          const DesignTemplate& tmpl, const FitConfig& fit_config,
                          const GofOptions& options) {
    bins.validate();
    tmpl.validate();
    fitted.validate();
    if (options.replicates < 0) throw ConfigError("gof: replicates must be nonnegative");
    if (options.threads < 0) throw ConfigError("gof: threads must be nonnegative");

    GofReport report;
    report.replicates = options.replicates;
    report.refit_mode = options.refit;

    for (const auto& [ts, edges] : bins.edges_by_ts) {
        TsGofStats stats;
        stats.ts = ts;
        stats.counts = bin_counts(data, ts, edges);
        stats.n_d = 0;
        for (int m : stats.counts) stats.n_d += m;
        if (stats.n_d == 0) {
            std::ostringstream msg;
            msg << "gof: no active observations at ts_tilde=" << ts;
            throw ConfigError(msg.str());
        }
        stats.probs = group_probabilities(ts, fitted, data.plan, edges);
        stats.statistic = chi_square_stat(stats.counts, stats.probs, stats.n_d);
        report.observed.push_back(std::move(stats));
    }
    report.exceed_counts.assign(report.observed.size(), 0);
    if (options.replicates == 0) return report;

    if (options.refit) {
        for (const auto& [ts, edges] : bins.edges_by_ts) {
            bool present = false;
            for (const auto& row : tmpl.rows) present = present || row.ts == ts;
            if (!present) {
                std::ostringstream msg;
                msg << "gof: template has no specimens at binned ts_tilde=" << ts;
                throw ConfigError(msg.str());
            }
        }
    }

    std::vector<ReplicateRecord> records(static_cast<std::size_t>(options.replicates));
    const auto compute_replicate = [&](int j) -> ReplicateRecord {
        ReplicateRecord rec;
        try {
            const std::uint64_t rep_seed = replicate_seed(options.seed, j);
            const Dataset sim = generate_dataset(tmpl, fitted, data.plan, rep_seed);
            ModelParams theta = fitted;
            if (options.refit) {
                FitResult fr = fit(sim, fit_config);
                // A refit that converged onto a flagged point (spurious beta < 1
                // root, unusable log-likelihood) is still an unusable estimate.
                if (!fr.converged || !fr.warnings.empty()) return rec;
                theta = fr.params;
            }
            rec.stats.reserve(report.observed.size());
            for (const auto& obs_stats : report.observed) {
                const auto& edges = bins.edges_by_ts.at(obs_stats.ts);
                const std::vector<int> counts = bin_counts(sim, obs_stats.ts, edges);
                int n_d = 0;
                for (int m : counts) n_d += m;
                const std::vector<double> probs = group_probabilities(obs_stats.ts, theta, data.plan, edges);
                rec.stats.push_back(chi_square_stat(counts, probs, n_d));
            }
            rec.theta = {theta.beta, theta.n, theta.zeta, theta.v_th};
            rec.success = true;
        } catch (const std::exception&) {
            rec.success = false;
            rec.stats.clear();
        }
        return rec;
    };
    const auto run_replicate = [&](int j) {
        records[static_cast<std::size_t>(j)] = compute_replicate(j);
    };

    unsigned n_threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                             : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(options.replicates));
    if (n_threads <= 1) {
        for (int j = 0; j < options.replicates; ++j) run_replicate(j);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        workers.reserve(n_threads);
        for (unsigned w = 0; w < n_threads; ++w) {
            workers.emplace_back([&] {
                for (int j = next.fetch_add(1); j < options.replicates; j = next.fetch_add(1))
                    run_replicate(j);
            });
        }
        for (auto& worker : workers) worker.join();
    }

    int successes = 0;
    std::array<double, 4> sums{};
    for (const auto& rec : records) {
        if (!rec.success) continue;
        ++successes;
        bool all_exceed = true;
        for (std::size_t g = 0; g < report.observed.size(); ++g) {
            const bool exceeds = rec.stats[g] >= report.observed[g].statistic;
            if (exceeds) ++report.exceed_counts[g];
            all_exceed = all_exceed && exceeds;
        }
        if (all_exceed) ++report.simultaneous_exceed;
        for (int p = 0; p < 4; ++p) sums[p] += rec.theta[p];
    }
    report.failed_fits = options.replicates - successes;
    if (successes == 0) throw FitError("gof: every bootstrap replicate failed to refit");
    report.p_value_bound = static_cast<double>(report.simultaneous_exceed) / options.replicates;

    if (options.refit) {
        const std::array<double, 4> fitted_arr{fitted.beta, fitted.n, fitted.zeta, fitted.v_th};
        std::array<double, 4> means{};
        for (int p = 0; p < 4; ++p) means[p] = sums[p] / successes;
        for (int p = 0; p < 4; ++p) report.bias[p] = means[p] - fitted_arr[p];
        if (successes > 1) {
            std::array<double, 4> ss{};
            for (const auto& rec : records) {
                if (!rec.success) continue;
                for (int p = 0; p < 4; ++p) {
                    const double d = rec.theta[p] - means[p];
                    ss[p] += d * d;
                }
            }
            for (int p = 0; p < 4; ++p) report.variance[p] = ss[p] / (successes - 1);
        }
    }
    return report;
}

} // namespace ssce
