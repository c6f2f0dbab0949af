#include "lagfactor/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Cholesky>

#include "lagfactor/error.hpp"
#include "lagfactor/linalg.hpp"

namespace lagfactor {

double soft_threshold(double z, double tau) noexcept
{
    if (z > tau) return z - tau;
    if (z < -tau) return z + tau;
    return 0.0;
}

SvtResult svt_soft(const Matrix& m, double tau)
{
    if (!(tau >= 0.0)) throw ValidationError("svt_soft: tau must be >= 0");
    const Svd svd = thin_svd(m);
    SvtResult out;
    out.values = (svd.s.array() - tau).max(0.0).matrix();
    const int keep = numerical_rank(out.values, 0.0);
    out.matrix = svd.u.leftCols(keep) * out.values.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose();
    return out;
}

SvtResult svt_hard(const Matrix& m, int r)
{
    const Index max_rank = std::min(m.rows(), m.cols());
    if (r < 1 || r > max_rank) {
        throw ValidationError("svt_hard: rank " + std::to_string(r) + " outside [1, " + std::to_string(max_rank) +
                              "]");
    }
    const Svd svd = thin_svd(m);
    SvtResult out;
    out.values = svd.s.head(r);
    out.matrix = svd.u.leftCols(r) * out.values.asDiagonal() * svd.v.leftCols(r).transpose();
    return out;
}

Matrix project_box(const Matrix& m, double bound)
{
    if (!(bound >= 0.0)) throw ValidationError("project_box: bound must be >= 0");
    return m.cwiseMax(-bound).cwiseMin(bound);
}

Matrix prox_nuclear_box(const Matrix& m, double tau, double bound, double tol, int max_iters)
{
    if (!(bound >= 0.0)) throw ValidationError("prox_nuclear_box: bound must be >= 0");
    if (bound == 0.0) return Matrix::Zero(m.rows(), m.cols());

    Matrix x = m;
    Matrix carry_nuclear = Matrix::Zero(m.rows(), m.cols());
    Matrix carry_box = Matrix::Zero(m.rows(), m.cols());
    for (int it = 0; it < max_iters; ++it) {
        const Matrix y = svt_soft(x + carry_nuclear, tau).matrix;
        carry_nuclear += x - y;
        Matrix next = project_box(y + carry_box, bound);
        carry_box += y - next;
        const double change = (next - x).norm() / std::max(x.norm(), 1e-300);
        x = std::move(next);
        if (!x.allFinite()) throw NumericError("prox_nuclear_box: non-finite iterate");
        if (change < tol) break;
    }
    return x;
}

namespace {

// Objective up to the constant ||y||^2 / (2 scale), using grad = c - G b:
// 1/2 b^T G b - c^T b = -1/2 b^T (c + grad).
double covariance_objective(const Vector& xty, const Vector& grad, const Vector& beta, double lambda)
{
    return -0.5 * beta.dot(xty + grad) + lambda * beta.lpNorm<1>();
}

double kkt_from_gradient(const Matrix& gram, const Vector& grad, const Vector& beta, double lambda)
{
    double worst = 0.0;
    for (Index k = 0; k < beta.size(); ++k) {
        if (gram(k, k) <= 0.0) continue;
        const double viol = beta(k) != 0.0 ? std::abs(grad(k) - lambda * (beta(k) > 0.0 ? 1.0 : -1.0))
                                           : std::max(std::abs(grad(k)) - lambda, 0.0);
        worst = std::max(worst, viol);
    }
    return worst;
}

// Minimizes the objective over the orthant face fixed by the signs of beta on
// `support`, stepping back to the first coordinate that would change sign.
// The objective is a convex quadratic on the segment, so it cannot rise.
// Returns false (beta untouched) when the restricted system is singular.
bool newton_on_support(const Matrix& gram, const Vector& xty, double lambda, const std::vector<Index>& support,
                       LassoCache& cache, Vector& beta)
{
    const Index n = static_cast<Index>(support.size());
    if (!cache.usable || cache.support != support) {
        Matrix g(n, n);
        for (Index b = 0; b < n; ++b) {
            for (Index a = 0; a < n; ++a) {
                g(a, b) = gram(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
            }
        }
        cache.support = support;
        cache.llt.compute(g);
        cache.usable = cache.llt.info() == Eigen::Success;
        if (cache.usable) {
            // Squared diagonal ratio of the factor: a cheap lower bound on the
            // condition number; near-singular faces fall back to CD alone.
            const Vector d = cache.llt.matrixLLT().diagonal().cwiseAbs2();
            cache.usable = d.minCoeff() > 1e-12 * d.maxCoeff();
        }
    }
    if (!cache.usable) return false;

    Vector rhs(n), current(n);
    for (Index a = 0; a < n; ++a) {
        const Index i = support[static_cast<std::size_t>(a)];
        current(a) = beta(i);
        rhs(a) = xty(i) - lambda * (beta(i) > 0.0 ? 1.0 : -1.0);
    }
    const Vector target = cache.llt.solve(rhs);
    if (!target.allFinite()) return false;

    double step = 1.0;
    Index blocking = -1;
    for (Index a = 0; a < n; ++a) {
        if (target(a) * current(a) <= 0.0) {
            const double t = current(a) / (current(a) - target(a));
            if (t < step) {
                step = t;
                blocking = a;
            }
        }
    }
    for (Index a = 0; a < n; ++a) {
        beta(support[static_cast<std::size_t>(a)]) = current(a) + step * (target(a) - current(a));
    }
    if (blocking >= 0) beta(support[static_cast<std::size_t>(blocking)]) = 0.0;
    return true;
}

} // namespace

double lasso_kkt_residual(const Matrix& gram, const Vector& xty, double lambda, const Vector& beta)
{
    const Vector grad = xty - gram * beta;
    return kkt_from_gradient(gram, grad, beta, lambda);
}

LassoSolution lasso_covariance_cd(const Matrix& gram, const Vector& xty, double lambda, const Vector& init,
                                  const LassoOptions& options, LassoCache* cache)
{
    LassoCache local;
    LassoCache& factor = cache ? *cache : local;
    const Index q = gram.rows();
    if (gram.cols() != q || xty.size() != q || init.size() != q) {
        throw DimensionError("lasso: gram, xty and init sizes disagree");
    }
    if (!(lambda >= 0.0)) throw ValidationError("lasso: lambda must be >= 0");

    LassoSolution sol;
    sol.beta = init;
    for (Index k = 0; k < q; ++k) {
        if (gram(k, k) <= 0.0) sol.beta(k) = 0.0;
    }
    Vector grad = xty - gram * sol.beta;
    if (options.record_objective) sol.cycle_objectives.push_back(covariance_objective(xty, grad, sol.beta, lambda));

    // Every coordinate update is an exact minimization, so the objective
    // never rises.
    auto update = [&](Index k) {
        const double gkk = gram(k, k);
        if (gkk <= 0.0) return 0.0;
        const double old = sol.beta(k);
        const double updated = soft_threshold(grad(k) + gkk * old, lambda) / gkk;
        if (!std::isfinite(updated)) throw NumericError("lasso: non-finite coordinate update");
        const double delta = updated - old;
        if (delta != 0.0) {
            grad.noalias() -= delta * gram.col(k);
            sol.beta(k) = updated;
        }
        return std::abs(delta);
    };
    // Each cycle is a full sweep, which adjusts the support. Once a sweep
    // leaves the support unchanged, a Newton step on the orthant face of that
    // support follows (factorizations are only paid for stable supports).
    std::vector<Index> support, previous;
    for (int cycle = 1; cycle <= options.max_iters; ++cycle) {
        double max_change = 0.0;
        for (Index k = 0; k < q; ++k) max_change = std::max(max_change, update(k));
        sol.iterations = cycle;
        if (max_change >= options.tol) {
            support.clear();
            for (Index k = 0; k < q; ++k) {
                if (sol.beta(k) != 0.0) support.push_back(k);
            }
            if (!support.empty() && support == previous) {
                const Vector before = sol.beta;
                const double f_before = covariance_objective(xty, grad, sol.beta, lambda);
                if (newton_on_support(gram, xty, lambda, support, factor, sol.beta)) {
                    Vector trial = xty - gram * sol.beta;
                    // An inaccurate solve on a badly conditioned face is undone.
                    if (covariance_objective(xty, trial, sol.beta, lambda) <= f_before) {
                        grad = std::move(trial);
                    } else {
                        sol.beta = before;
                    }
                }
            }
            std::swap(previous, support);
        }
        if (options.record_objective) {
            sol.cycle_objectives.push_back(covariance_objective(xty, grad, sol.beta, lambda));
        }
        if (max_change >= options.tol) continue;
        grad = xty - gram * sol.beta; // drop accumulated rounding
        sol.kkt_residual = kkt_from_gradient(gram, grad, sol.beta, lambda);
        if (sol.kkt_residual < options.tol) {
            sol.converged = true;
            return sol;
        }
    }
    sol.kkt_residual = lasso_kkt_residual(gram, xty, lambda, sol.beta);
    return sol;
}

LassoSolution lasso_coordinate_descent(const LassoProblem& problem, const Vector& init, const LassoOptions& options)
{
    if (problem.design.rows() != problem.target.size()) {
        throw DimensionError("lasso: design has " + std::to_string(problem.design.rows()) + " rows, target has " +
                             std::to_string(problem.target.size()));
    }
    const double scale = problem.scale > 0.0 ? problem.scale : static_cast<double>(problem.design.rows());
    const Matrix gram = problem.design.transpose() * problem.design / scale;
    const Vector xty = problem.design.transpose() * problem.target / scale;
    LassoSolution sol = lasso_covariance_cd(gram, xty, problem.lambda, init, options);
    const double constant = problem.target.squaredNorm() / (2.0 * scale);
    for (double& v : sol.cycle_objectives) v += constant;
    return sol;
}

} // namespace lagfactor
