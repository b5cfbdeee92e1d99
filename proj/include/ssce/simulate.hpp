#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ssce/estimator.hpp"
#include "ssce/likelihood.hpp"

namespace ssce {

// Sampling design: how many specimens at each prior exposure.
struct DesignTemplate {
    struct Row {
        double ts;
        int count;
    };
    std::vector<Row> rows;

    int total() const;
    void validate() const; // throws ConfigError
};

// Per-ts bin layouts over stage-start values. Upper edges e_1 < ... < e_{kappa-1}
// define bins [0, e_1], (e_1, e_2], ..., (e_{kappa-1}, inf).
struct BinSpec {
    std::map<double, std::vector<double>> edges_by_ts;

    void validate() const; // throws ConfigError
};

struct TsGofStats {
    double ts;
    std::vector<int> counts;    // m_i from the data
    std::vector<double> probs;  // p_i from the model
    double statistic;           // chi-square T
    int n_d;                    // specimens at this ts
};

struct GofOptions {
    int replicates = 1000;
    std::uint64_t seed = 0;
    bool refit = true; // per-replicate statistic from refitted params (vs. the fixed ones)
    int threads = 0;   // 0 = hardware concurrency
};

struct GofReport {
    std::vector<TsGofStats> observed;
    std::vector<int> exceed_counts; // aligned with observed; counts of T_sim >= T_obs
    int simultaneous_exceed = 0;
    int replicates = 0;
    int failed_fits = 0;
    double p_value_bound = 0.0; // simultaneous_exceed / replicates
    std::array<double, 4> bias{};
    std::array<double, 4> variance{};
    bool refit_mode = true;
};

// Inversion sampler: draws the failure stage and returns its recorded
// stage-start value i-2, where i is the unique stage with
// cum_rate(i-1) < q - eps1(ts) <= cum_rate(i). Deterministic in u.
int sample_failure(double ts, const ModelParams& params, const TestPlan& plan, double u);
int sample_failure(double ts, const StageCache& cache, double u);

// The continuous failure time behind the same inversion; used as an
// independent Monte Carlo oracle for the moment formulas.
double sample_failure_time(double ts, const StageCache& cache, double u);

// One Observation per template slot, uniforms from mt19937_64(seed).
Dataset generate_dataset(const DesignTemplate& tmpl, const ModelParams& params,
                         const TestPlan& plan, std::uint64_t seed);

// Counts of non-excluded observations per distinct ts, in ascending ts order.
DesignTemplate template_from_dataset(const Dataset& data);

// Bin probabilities at one ts: CDF increments across the numeric bin edges,
// tail bin by the survival at the last edge. Sums to 1 up to rounding.
std::vector<double> group_probabilities(double ts, const ModelParams& params, const TestPlan& plan,
                                        const std::vector<double>& edges);

// Bin counts of the recorded stage-start values of the non-excluded
// observations at one ts; first bin closed on both ends.
std::vector<int> bin_counts(const Dataset& data, double ts, const std::vector<double>& edges);

// T = sum (m_i - N p_i)^2 / (N p_i). Throws if a bin with observations has
// zero probability or the counts do not total n_d.
double chi_square_stat(const std::vector<int>& counts, const std::vector<double>& probs, int n_d);

// Parametric bootstrap: generate at `fitted`, refit, compare each replicate's
// statistics with the observed ones. Replicates whose refit fails are counted
// and excluded from both the exceedance counts and the bias/variance table.
// Replicate RNG streams depend only on (seed, replicate index), and results
// are reduced in replicate order, so the report is identical across thread
// counts.
GofReport gof_monte_carlo(const Dataset& data, const ModelParams& fitted, const BinSpec& bins,
                          const DesignTemplate& tmpl, const FitConfig& fit_config,
                          const GofOptions& options);

} // namespace ssce
