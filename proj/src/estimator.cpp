#include "ssce/estimator.hpp"

#include <cmath>
#include <limits>

namespace ssce {

namespace {

constexpr double guard_band = 1e-12;

ModelParams params_from(const std::array<double, 4>& x, double k0) {
    return ModelParams{x[0], x[1], x[2], x[3], k0};
}

Eigen::VectorXd score_as_vector(const Dataset& data, const ModelParams& params, int dim) {
    const ScoreVector s = score_equations(data, params);
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i)
        v(i) = s[static_cast<std::size_t>(i)];
    return v;
}

Eigen::MatrixXd jacobian_as_matrix(const Dataset& data, const ModelParams& params, int dim) {
    const ScoreJacobian j = score_jacobian(data, params);
    Eigen::MatrixXd m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

} // namespace

void FitConfig::validate() const {
    if (!(profile_start >= 0.0 && profile_start < profile_end && profile_end < 1.0))
        throw ConfigError("profile sweep requires 0 <= start < end < 1");
    if (!(profile_step > 0.0))
        throw ConfigError("profile_step must be positive");
    if (!(newton_tol > 0.0))
        throw ConfigError("newton_tol must be positive");
    if (max_iter < 1)
        throw ConfigError("max_iter must be at least 1");
    if (!(k0 > 0.0))
        throw ConfigError("k0 must be positive");
}

bool feasible_params(const ModelParams& params, const TestPlan& plan) {
    if (!(params.beta > 0.0 && params.n > 0.0 && params.zeta > 0.0))
        return false;
    if (!(params.v_th >= 0.0 && params.v_th < 1.0))
        return false;
    if (!std::isfinite(params.beta) || !std::isfinite(params.n) || !std::isfinite(params.zeta) ||
        !std::isfinite(params.v_th))
        return false;
    const int k = first_effective_stage(params, plan);
    return (k - 1) * plan.dv - params.v_th >= guard_band;
}

NewtonResult damped_newton(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                           const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
                           const Eigen::VectorXd& x0,
                           const std::function<bool(const Eigen::VectorXd&)>& feasible,
                           const NewtonOptions& options) {
    NewtonResult result;
    result.x = x0;

    auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        if (!feasible(x))
            return false;
        try {
            out = residual(x);
        } catch (const std::exception&) {
            return false;
        }
        return out.allFinite();
    };

    Eigen::VectorXd fx;
    if (!eval(result.x, fx)) {
        result.failure = "residual not evaluable at the initial point";
        return result;
    }
    double norm = fx.norm();
    result.accepted_norms.push_back(norm);
    result.residual_max = fx.lpNorm<Eigen::Infinity>();

    for (int it = 0; it < options.max_iter; ++it) {
        if (result.residual_max <= options.tol) {
            result.converged = true;
            result.iterations = it;
            return result;
        }
        Eigen::MatrixXd J;
        try {
            J = jacobian(result.x);
        } catch (const std::exception& e) {
            result.failure = std::string("Jacobian not evaluable: ") + e.what();
            result.iterations = it;
            return result;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
        if (!lu.isInvertible()) {
            result.failure = "singular Jacobian";
            result.iterations = it;
            return result;
        }
        const Eigen::VectorXd d = lu.solve(-fx);
        double s = 1.0;
        Eigen::VectorXd xn, fn;
        bool accepted = false;
        while (s >= options.min_damping) {
            xn = result.x + s * d;
            if (eval(xn, fn) && fn.norm() < (1.0 - s / 2.0) * norm) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            result.failure = "damping underflow";
            result.iterations = it;
            return result;
        }
        result.x = xn;
        fx = fn;
        norm = fx.norm();
        result.accepted_norms.push_back(norm);
        result.residual_max = fx.lpNorm<Eigen::Infinity>();
    }
    result.iterations = options.max_iter;
    result.converged = result.residual_max <= options.tol;
    if (!result.converged)
        result.failure = "iteration cap reached";
    return result;
}

ProfileOutcome profile_stage(const Dataset& data, const FitConfig& config) {
    config.validate();
    if (data.active_count() == 0)
        throw ConfigError("cannot fit an empty dataset");

    NewtonOptions newton_opts{config.newton_tol, config.max_iter, config.min_damping};
    ProfileOutcome outcome;
    bool have_best = false;

    Eigen::VectorXd warm(3);
    warm << config.init[0], config.init[1], config.init[2];

    int grid_index = 0;
    for (;; ++grid_index) {
        const double v = config.profile_start + grid_index * config.profile_step;
        if (v > config.profile_end + 1e-12)
            break;

        auto make_params = [&](const Eigen::VectorXd& x) {
            return params_from({x(0), x(1), x(2), v}, config.k0);
        };
        auto residual = [&](const Eigen::VectorXd& x) {
            return score_as_vector(data, make_params(x), 3);
        };
        auto jacobian = [&](const Eigen::VectorXd& x) {
            return jacobian_as_matrix(data, make_params(x), 3);
        };
        auto feasible = [&](const Eigen::VectorXd& x) {
            return feasible_params(make_params(x), data.plan);
        };

        const NewtonResult sol = damped_newton(residual, jacobian, warm, feasible, newton_opts);
        if (!sol.converged) {
            outcome.warnings.push_back("profile grid point v_th=" + std::to_string(v) +
                                       " failed: " + sol.failure);
            continue;
        }
        double ll;
        try {
            ll = log_likelihood(data, make_params(sol.x));
        } catch (const std::exception& e) {
            outcome.warnings.push_back("profile grid point v_th=" + std::to_string(v) +
                                       " log-likelihood failed: " + e.what());
            continue;
        }
        const ProfilePoint point{v, ll, {sol.x(0), sol.x(1), sol.x(2)}};
        outcome.trace.push_back(point);
        if (!have_best || ll > outcome.best.loglik) {
            outcome.best = point;
            have_best = true;
        }
        warm = sol.x;
    }

    if (!have_best)
        throw FitError("every profile grid point failed to converge");
    return outcome;
}

FitResult fit(const Dataset& data, const FitConfig& config) {
    ProfileOutcome profile = profile_stage(data, config);

    NewtonOptions newton_opts{config.newton_tol, config.max_iter, config.min_damping};
    auto make_params = [&](const Eigen::VectorXd& x) {
        return params_from({x(0), x(1), x(2), x(3)}, config.k0);
    };
    auto residual = [&](const Eigen::VectorXd& x) {
        return score_as_vector(data, make_params(x), 4);
    };
    auto jacobian = [&](const Eigen::VectorXd& x) {
        return jacobian_as_matrix(data, make_params(x), 4);
    };
    auto feasible = [&](const Eigen::VectorXd& x) {
        return feasible_params(make_params(x), data.plan);
    };

    Eigen::VectorXd x0(4);
    x0 << profile.best.sub[0], profile.best.sub[1], profile.best.sub[2], profile.best.v_th;
    const NewtonResult sol = damped_newton(residual, jacobian, x0, feasible, newton_opts);

    FitResult result;
    result.params = make_params(sol.x);
    result.converged = sol.converged;
    result.iterations = sol.iterations;
    result.profile_trace = std::move(profile.trace);
    result.profile_warnings = std::move(profile.warnings);
    if (!sol.converged)
        result.warnings.push_back("full 4-parameter solve did not converge: " + sol.failure);
    if (result.params.beta < 1.0)
        result.warnings.push_back("converged with beta < 1; likely a spurious root (profile "
                                  "sweep may have missed the optimum basin)");
    try {
        result.loglik = log_likelihood(data, result.params);
    } catch (const std::exception& e) {
        result.loglik = -std::numeric_limits<double>::infinity();
        result.warnings.push_back(std::string("log-likelihood at the solution failed: ") + e.what());
    }
    return result;
}

} // namespace ssce
