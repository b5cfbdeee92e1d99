#include "ssce/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include <Eigen/Dense>

namespace ssce {

namespace {

// Nodes are the eigenvalues of the Jacobi matrix of the orthogonal-polynomial
// recurrence; weights are mu0 times the squared first eigenvector components.
QuadratureRule golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& subdiag,
                            double mu0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw NumericalError("tridiagonal eigensolve failed while building a quadrature rule");
    const int n = static_cast<int>(diag.size());
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = solver.eigenvalues()(i);
        const double c = solver.eigenvectors()(0, i);
        rule.weights[i] = mu0 * c * c;
    }
    return rule;
}

QuadratureRule make_gauss_laguerre(int n) {
    Eigen::VectorXd diag(n), subdiag(n - 1);
    for (int i = 0; i < n; ++i)
        diag(i) = 2.0 * i + 1.0;
    for (int i = 1; i < n; ++i)
        subdiag(i - 1) = static_cast<double>(i);
    return golub_welsch(diag, subdiag, 1.0);
}

QuadratureRule make_gauss_legendre(int n) {
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd subdiag(n - 1);
    for (int i = 1; i < n; ++i)
        subdiag(i - 1) = i / std::sqrt(4.0 * i * i - 1.0);
    return golub_welsch(diag, subdiag, 2.0);
}

const QuadratureRule& cached_rule(int n, QuadratureRule (*make)(int),
                                  std::map<int, QuadratureRule>& cache, std::mutex& mutex) {
    if (n < 1)
        throw ConfigError("quadrature node count must be positive, got " + std::to_string(n));
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, make(n)).first;
    return it->second;
}

} // namespace

const QuadratureRule& gauss_laguerre(int n) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mutex;
    return cached_rule(n, make_gauss_laguerre, cache, mutex);
}

const QuadratureRule& gauss_legendre(int n) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mutex;
    return cached_rule(n, make_gauss_legendre, cache, mutex);
}

QuadratureResult integrate_doubling(const std::function<double(double)>& f,
                                    const QuadratureRule& (*rule)(int), int start, int cap,
                                    double rel_tol) {
    QuadratureResult result;
    bool have_prev = false;
    double prev = 0.0;
    for (int n = start;; n *= 2) {
        const QuadratureRule& r = rule(n);
        double sum = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
            sum += r.weights[i] * f(r.nodes[i]);
        result.value = sum;
        result.nodes = n;
        if (have_prev) {
            result.error_bound = std::abs(sum - prev);
            const double scale = std::max(std::abs(sum), 1e-300);
            if (result.error_bound <= rel_tol * scale) {
                result.converged = true;
                return result;
            }
        }
        if (n >= cap)
            return result;
        prev = sum;
        have_prev = true;
    }
}

} // namespace ssce
