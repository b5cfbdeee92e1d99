#include "ssce/cli.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssce/errors.hpp"
#include "ssce/estimator.hpp"
#include "ssce/io.hpp"
#include "ssce/model.hpp"
#include "ssce/moments.hpp"
#include "ssce/simulate.hpp"

namespace ssce {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> parse_csv_doubles(const std::string& text, const char* flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = text.find(',', start);
        const std::string field =
            comma == std::string::npos ? text.substr(start) : text.substr(start, comma - start);
        try {
            std::size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ConfigError(std::string(flag) + ": invalid number '" + field + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return values;
}

std::array<double, 4> parse_init(const std::string& text) {
    const auto v = parse_csv_doubles(text, "--init");
    if (v.size() != 4) throw ConfigError("--init: expected beta,n,zeta,v_th");
    return {v[0], v[1], v[2], v[3]};
}

ModelParams parse_params(const std::string& text, double k0) {
    const auto v = parse_csv_doubles(text, "--params");
    if (v.size() != 4) throw ConfigError("--params: expected beta,n,zeta,v_th");
    ModelParams params{v[0], v[1], v[2], v[3], k0};
    params.validate();
    return params;
}

void apply_profile(FitConfig& config, const std::string& text) {
    const auto v = parse_csv_doubles(text, "--profile");
    if (v.size() != 3) throw ConfigError("--profile: expected start,end,step");
    config.profile_start = v[0];
    config.profile_end = v[1];
    config.profile_step = v[2];
}

// "--grid a:b:Nlog", "a:b:Nlin", "a:b:N" (linear), or a single value.
std::vector<double> parse_grid(const std::string& text) {
    const auto bad = [&](const std::string& why) {
        throw ConfigError("--grid: " + why + " in '" + text + "'");
    };
    const std::size_t c1 = text.find(':');
    if (c1 == std::string::npos) {
        const auto v = parse_csv_doubles(text, "--grid");
        if (v.size() != 1 || !(v[0] >= 0.0)) bad("expected one nonnegative ts value");
        return v;
    }
    const std::size_t c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos)
        bad("expected ts0:ts1:steps[log|lin]");

    const double a = parse_csv_doubles(text.substr(0, c1), "--grid").front();
    const double b = parse_csv_doubles(text.substr(c1 + 1, c2 - c1 - 1), "--grid").front();
    std::string tail = text.substr(c2 + 1);
    bool log_spaced = false;
    if (tail.size() >= 3 && tail.substr(tail.size() - 3) == "log") {
        log_spaced = true;
        tail = tail.substr(0, tail.size() - 3);
    } else if (tail.size() >= 3 && tail.substr(tail.size() - 3) == "lin") {
        tail = tail.substr(0, tail.size() - 3);
    }
    long steps = 0;
    try {
        std::size_t used = 0;
        steps = std::stol(tail, &used);
        if (used != tail.size()) throw std::invalid_argument(tail);
    } catch (const std::exception&) {
        bad("invalid step count");
    }
    if (steps < 1) bad("step count must be at least 1");
    if (!(a >= 0.0) || !(b >= 0.0)) bad("ts values must be nonnegative");
    if (log_spaced && (a <= 0.0 || b <= 0.0)) bad("log spacing needs positive endpoints");

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
        grid.push_back(a);
        return grid;
    }
    for (long i = 0; i < steps; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(steps - 1);
        grid.push_back(log_spaced ? std::exp(std::log(a) + f * (std::log(b) - std::log(a)))
                                  : a + f * (b - a));
    }
    return grid;
}

json make_manifest(const std::string& command, json inputs, json config,
                   std::optional<std::uint64_t> seed, double wall_time_s) {
    json manifest;
    manifest["command"] = command;
    manifest["inputs"] = std::move(inputs);
    manifest["config"] = std::move(config);
    if (seed) manifest["seed"] = *seed;
    manifest["version"] = tool_version;
    manifest["wall_time_s"] = wall_time_s;
    return manifest;
}

void write_file_or_stdout(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << text;
    if (!out) throw ConfigError(path + ": write failed");
}

void emit_json(const std::string& path, const json& doc) {
    write_file_or_stdout(path, doc.dump(2) + "\n");
}

void write_sidecar_manifest(const std::string& out_path, const json& manifest) {
    if (out_path.empty() || out_path == "-") return;
    write_file_or_stdout(out_path + ".manifest.json", manifest.dump(2) + "\n");
}

json params_json(const ModelParams& params) {
    return json{{"beta", params.beta},
                {"n", params.n},
                {"zeta", params.zeta},
                {"v_th", params.v_th},
                {"k0", params.k0},
                {"k_tilde", params.zeta * params.k0}};
}

struct FitFlags {
    std::string data;
    std::string out;
    double dv = default_dv;
    double k0 = 1e4;
    std::string init = "2.0,2,1,0.5";
    std::string profile = "0.5,0.999,0.001";
    int max_iter = 100;
};

int cmd_fit(const FitFlags& flags) {
    const auto t0 = Clock::now();
    Dataset data = read_dataset(flags.data);
    data.plan.dv = flags.dv;
    data.plan.validate();

    FitConfig config;
    config.init = parse_init(flags.init);
    apply_profile(config, flags.profile);
    config.max_iter = flags.max_iter;
    config.k0 = flags.k0;
    config.validate();

    json doc;
    int code = exit_ok;
    try {
        const FitResult result = fit(data, config);
        doc["beta"] = result.params.beta;
        doc["n"] = result.params.n;
        doc["zeta"] = result.params.zeta;
        doc["v_th"] = result.params.v_th;
        doc["k_tilde"] = result.params.zeta * result.params.k0;
        doc["loglik"] = result.loglik;
        doc["converged"] = result.converged;
        doc["iterations"] = result.iterations;
        json trace = json::array();
        for (const auto& point : result.profile_trace)
            trace.push_back({{"v_th", point.v_th},
                             {"loglik", point.loglik},
                             {"beta", point.sub[0]},
                             {"n", point.sub[1]},
                             {"zeta", point.sub[2]}});
        doc["profile"] = std::move(trace);
        doc["warnings"] = result.warnings;
        doc["profile_warnings"] = result.profile_warnings;
        if (!result.converged)
            code = exit_nonconvergence;
        else if (!result.warnings.empty())
            code = exit_warnings;
    } catch (const FitError& e) {
        doc["converged"] = false;
        doc["error"] = e.what();
        code = exit_nonconvergence;
    }
    doc["manifest"] = make_manifest(
        "fit", json{{"data", flags.data}},
        json{{"dv", flags.dv},
             {"k0", flags.k0},
             {"init", flags.init},
             {"profile", flags.profile},
             {"max_iter", flags.max_iter}},
        std::nullopt, seconds_since(t0));
    emit_json(flags.out, doc);
    return code;
}

struct CurvesFlags {
    std::string grid;
    std::string params;
    bool table1 = false;
    double dv = default_dv;
    bool dv_given = false;
    double k0 = 1e4;
    std::string out;
    std::string plot_dir;
};

std::string curve_row_csv(const ModelParams& params, const TestPlan& plan, const CurveRow& row) {
    std::ostringstream line;
    line << std::setprecision(17) << params.zeta * params.k0 << ',' << plan.dv << ',' << params.v_th
         << ',' << params.beta << ',' << params.n << ',' << row.ts << ',' << row.result.mean_norm
         << ',' << row.result.sd_norm << '\n';
    return line.str();
}

std::string plot_file_name(const ModelParams& params) {
    std::ostringstream name;
    name << "curves_beta" << params.beta << "_K" << params.zeta * params.k0 << "_vth"
         << params.v_th << ".csv";
    return name.str();
}

int cmd_curves(const CurvesFlags& flags) {
    const auto t0 = Clock::now();
    if (flags.table1 && !flags.params.empty())
        throw ConfigError("--table1 and --params are mutually exclusive");
    if (!flags.table1 && flags.params.empty())
        throw ConfigError("one of --params or --table1 is required");

    const std::vector<double> grid = parse_grid(flags.grid);

    struct Combo {
        ModelParams params;
        TestPlan plan;
    };
    std::vector<Combo> combos;
    if (flags.table1) {
        // The reference parameter study's grid; its step ratio is the rounded 0.39.
        const TestPlan plan{flags.dv_given ? flags.dv : 0.39};
        for (double beta : {2.0, 3.0})
            for (double n : {1.0, 2.0, 3.0})
                for (double k_tilde : {1e3, 1e4, 1e5})
                    for (double v_th : {0.0, 0.5, 0.9})
                        combos.push_back(
                            {ModelParams{beta, n, k_tilde / flags.k0, v_th, flags.k0}, plan});
    } else {
        combos.push_back({parse_params(flags.params, flags.k0), TestPlan{flags.dv}});
    }
    for (const auto& combo : combos) {
        combo.params.validate();
        combo.plan.validate();
    }

    const std::string header = "k_tilde,dv,v_th,beta,n,ts_tilde,mean_norm,sd_norm\n";
    std::string csv = header;
    std::vector<std::pair<std::string, std::string>> plot_files; // name -> body, insertion order
    for (const auto& combo : combos) {
        const std::vector<CurveRow> rows = curve(grid, combo.params, combo.plan);
        std::string block;
        for (const auto& row : rows) block += curve_row_csv(combo.params, combo.plan, row);
        csv += block;
        if (!flags.plot_dir.empty()) {
            const std::string name = plot_file_name(combo.params);
            auto it = std::find_if(plot_files.begin(), plot_files.end(),
                                   [&](const auto& entry) { return entry.first == name; });
            if (it == plot_files.end())
                plot_files.emplace_back(name, header + block);
            else
                it->second += block;
        }
    }

    write_file_or_stdout(flags.out, csv);
    const json manifest = make_manifest(
        "curves", json::object(),
        json{{"grid", flags.grid},
             {"params", flags.params},
             {"table1", flags.table1},
             {"dv", flags.table1 && !flags.dv_given ? 0.39 : flags.dv},
             {"k0", flags.k0}},
        std::nullopt, seconds_since(t0));
    write_sidecar_manifest(flags.out, manifest);

    if (!flags.plot_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(flags.plot_dir, ec);
        if (ec) throw ConfigError(flags.plot_dir + ": cannot create directory: " + ec.message());
        for (const auto& [name, body] : plot_files)
            write_file_or_stdout((std::filesystem::path(flags.plot_dir) / name).string(), body);
    }
    return exit_ok;
}

struct SimulateFlags {
    std::string params;
    std::string template_path;
    std::uint64_t seed = 0;
    double dv = default_dv;
    double k0 = 1e4;
    std::string out;
};

int cmd_simulate(const SimulateFlags& flags) {
    const auto t0 = Clock::now();
    const ModelParams params = parse_params(flags.params, flags.k0);
    const TestPlan plan{flags.dv};
    plan.validate();
    const DesignTemplate tmpl = read_template(flags.template_path);
    const Dataset data = generate_dataset(tmpl, params, plan, flags.seed);
    write_dataset(flags.out, data);
    const json manifest = make_manifest(
        "simulate", json{{"template", flags.template_path}},
        json{{"params", flags.params}, {"dv", flags.dv}, {"k0", flags.k0}}, flags.seed,
        seconds_since(t0));
    write_sidecar_manifest(flags.out, manifest);
    return exit_ok;
}

struct GofFlags {
    std::string data;
    std::string params;
    bool refit = false;
    std::string bins;
    int replicates = 1000;
    std::uint64_t seed = 0;
    std::string profile = "0.85,0.999,0.001";
    std::string init;
    std::string mode = "refit";
    int threads = 0;
    int max_iter = 8000;
    double dv = default_dv;
    double k0 = 1e4;
    std::string out;
};

int cmd_gof(const GofFlags& flags) {
    const auto t0 = Clock::now();
    if (flags.refit == !flags.params.empty())
        throw ConfigError("exactly one of --params or --refit is required");
    if (flags.mode != "refit" && flags.mode != "true")
        throw ConfigError("--mode must be 'refit' or 'true'");

    Dataset data = read_dataset(flags.data);
    data.plan.dv = flags.dv;
    data.plan.validate();
    const BinSpec bins = parse_bins(flags.bins);

    json doc;
    ModelParams fitted{};
    std::vector<std::string> warnings;
    if (flags.refit) {
        FitConfig initial_config;
        initial_config.max_iter = flags.max_iter;
        initial_config.k0 = flags.k0;
        initial_config.validate();
        const FitResult result = fit(data, initial_config);
        if (!result.converged) {
            doc["converged"] = false;
            doc["warnings"] = result.warnings;
            doc["manifest"] = make_manifest("gof", json{{"data", flags.data}},
                                            json{{"refit", true}}, flags.seed,
                                            seconds_since(t0));
            emit_json(flags.out, doc);
            return exit_nonconvergence;
        }
        fitted = result.params;
        warnings = result.warnings;
    } else {
        fitted = parse_params(flags.params, flags.k0);
    }

    FitConfig config;
    config.init = flags.init.empty()
                      ? std::array<double, 4>{fitted.beta, fitted.n, fitted.zeta, fitted.v_th}
                      : parse_init(flags.init);
    apply_profile(config, flags.profile);
    config.max_iter = flags.max_iter;
    config.k0 = flags.k0;
    config.validate();

    const auto manifest = [&](double wall) {
        return make_manifest("gof", json{{"data", flags.data}, {"bins", flags.bins}},
                             json{{"params", flags.params},
                                  {"refit", flags.refit},
                                  {"replicates", flags.replicates},
                                  {"profile", flags.profile},
                                  {"init", json{config.init[0], config.init[1], config.init[2],
                                                config.init[3]}},
                                  {"max_iter", flags.max_iter},
                                  {"mode", flags.mode},
                                  {"threads", flags.threads},
                                  {"dv", flags.dv},
                                  {"k0", flags.k0}},
                             flags.seed, wall);
    };

    GofOptions options;
    options.replicates = flags.replicates;
    options.seed = flags.seed;
    options.refit = flags.mode == "refit";
    options.threads = flags.threads;

    const DesignTemplate tmpl = template_from_dataset(data);
    const GofReport report = gof_monte_carlo(data, fitted, bins, tmpl, config, options);

    doc["params"] = params_json(fitted);
    json groups = json::array();
    for (std::size_t g = 0; g < report.observed.size(); ++g) {
        const TsGofStats& stats = report.observed[g];
        json group = {{"ts_tilde", stats.ts},
                      {"n_d", stats.n_d},
                      {"counts", stats.counts},
                      {"probs", stats.probs},
                      {"statistic", stats.statistic}};
        if (report.replicates > 0) group["exceed_count"] = report.exceed_counts[g];
        groups.push_back(std::move(group));
    }
    doc["groups"] = std::move(groups);
    if (report.replicates > 0) {
        json boot;
        boot["replicates"] = report.replicates;
        boot["failed_fits"] = report.failed_fits;
        boot["simultaneous_exceed"] = report.simultaneous_exceed;
        boot["p_value_bound"] = report.p_value_bound;
        boot["refit_mode"] = report.refit_mode;
        if (report.refit_mode) {
            boot["bias"] = {{"beta", report.bias[0]},
                            {"n", report.bias[1]},
                            {"zeta", report.bias[2]},
                            {"v_th", report.bias[3]}};
            boot["variance"] = {{"beta", report.variance[0]},
                                {"n", report.variance[1]},
                                {"zeta", report.variance[2]},
                                {"v_th", report.variance[3]}};
        }
        doc["bootstrap"] = std::move(boot);
    }
    doc["warnings"] = warnings;
    doc["manifest"] = manifest(seconds_since(t0));
    emit_json(flags.out, doc);
    return warnings.empty() ? exit_ok : exit_warnings;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Weibull cumulative-exposure model for step-stress tests on pre-used specimens",
                 "ssce"};
    app.require_subcommand(1);

    FitFlags fit_flags;
    CLI::App* fit_cmd =
        app.add_subcommand("fit", "Maximum-likelihood fit of (beta, n, zeta, v_th)");
    fit_cmd->add_option("--data", fit_flags.data, "Dataset CSV")->required();
    fit_cmd->add_option("--dv", fit_flags.dv, "Normalized voltage step");
    fit_cmd->add_option("--k0", fit_flags.k0, "Scale normalizer K0");
    fit_cmd->add_option("--init", fit_flags.init, "Starting point beta,n,zeta,v_th");
    fit_cmd->add_option("--profile", fit_flags.profile, "Threshold grid start,end,step");
    fit_cmd->add_option("--max-iter", fit_flags.max_iter, "Newton iteration cap per solve");
    fit_cmd->add_option("--out", fit_flags.out, "Output JSON path (default stdout)");

    CurvesFlags curves_flags;
    CLI::App* curves_cmd =
        app.add_subcommand("curves", "Residual-life mean and sd over a prior-exposure grid");
    curves_cmd->add_option("--grid", curves_flags.grid, "ts grid: a:b:N[log|lin] or one value")
        ->required();
    curves_cmd->add_option("--params", curves_flags.params, "Model point beta,n,zeta,v_th");
    curves_cmd->add_flag("--table1", curves_flags.table1,
                         "Sweep the reference 54-point parameter grid");
    CLI::Option* curves_dv =
        curves_cmd->add_option("--dv", curves_flags.dv, "Normalized voltage step");
    curves_cmd->add_option("--k0", curves_flags.k0, "Scale normalizer K0");
    curves_cmd->add_option("--out", curves_flags.out, "Output CSV path (default stdout)");
    curves_cmd->add_option("--emit-plot-data", curves_flags.plot_dir,
                           "Also write one CSV per (beta, K, v_th) into this directory");

    SimulateFlags simulate_flags;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Draw a synthetic dataset from the model");
    simulate_cmd->add_option("--params", simulate_flags.params, "Model point beta,n,zeta,v_th")
        ->required();
    simulate_cmd->add_option("--template", simulate_flags.template_path,
                             "Design CSV (ts_tilde,count)")
        ->required();
    simulate_cmd->add_option("--seed", simulate_flags.seed, "RNG seed");
    simulate_cmd->add_option("--dv", simulate_flags.dv, "Normalized voltage step");
    simulate_cmd->add_option("--k0", simulate_flags.k0, "Scale normalizer K0");
    simulate_cmd->add_option("--out", simulate_flags.out, "Output dataset CSV path")->required();

    GofFlags gof_flags;
    CLI::App* gof_cmd =
        app.add_subcommand("gof", "Chi-square goodness of fit with parametric bootstrap");
    gof_cmd->add_option("--data", gof_flags.data, "Dataset CSV")->required();
    gof_cmd->add_option("--params", gof_flags.params, "Fitted point beta,n,zeta,v_th");
    gof_cmd->add_flag("--refit", gof_flags.refit, "Fit the dataset first");
    gof_cmd->add_option("--bins", gof_flags.bins, "Bins JSON (path or inline object)")->required();
    gof_cmd->add_option("--replicates", gof_flags.replicates, "Bootstrap replicates");
    gof_cmd->add_option("--seed", gof_flags.seed, "RNG seed");
    gof_cmd->add_option("--profile", gof_flags.profile, "Threshold grid for bootstrap refits");
    gof_cmd->add_option("--init", gof_flags.init,
                        "Starting point for bootstrap refits (default: the fitted point)");
    gof_cmd->add_option("--max-iter", gof_flags.max_iter, "Newton iteration cap per solve");
    gof_cmd->add_option("--mode", gof_flags.mode,
                        "Replicate statistic parameters: 'refit' or 'true'");
    gof_cmd->add_option("--threads", gof_flags.threads, "Worker threads (0 = hardware)");
    gof_cmd->add_option("--dv", gof_flags.dv, "Normalized voltage step");
    gof_cmd->add_option("--k0", gof_flags.k0, "Scale normalizer K0");
    gof_cmd->add_option("--out", gof_flags.out, "Output JSON path (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(fit_flags);
        if (curves_cmd->parsed()) {
            curves_flags.dv_given = curves_dv->count() > 0;
            return cmd_curves(curves_flags);
        }
        if (simulate_cmd->parsed()) return cmd_simulate(simulate_flags);
        if (gof_cmd->parsed()) return cmd_gof(gof_flags);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_parse;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_config;
    } catch (const FitError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_nonconvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_other;
    }
    return exit_config;
}

} // namespace ssce
