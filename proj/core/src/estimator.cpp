#include "lagfactor/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lagfactor/error.hpp"
#include "lagfactor/linalg.hpp"
#include "lagfactor/parallel.hpp"
#include "lagfactor/solvers.hpp"

namespace lagfactor {

namespace {

void check_shapes(const LagDesign& design, const Matrix& b, const Matrix& theta)
{
    const Index p = design.series();
    if (b.rows() != p || b.cols() != design.predictors.cols()) {
        throw DimensionError("B must be " + std::to_string(p) + "x" + std::to_string(design.predictors.cols()));
    }
    if (theta.rows() != design.effective_rows() || theta.cols() != p) {
        throw DimensionError("Theta must be " + std::to_string(design.effective_rows()) + "x" + std::to_string(p));
    }
}

bool is_degenerate(const LagDesign& design)
{
    return design.effective_rows() <= 2 || design.series() == 1;
}

struct BStep {
    double max_kkt = 0.0;
    bool converged = true;
};

// Row-wise Lasso update of B against the cross moments `xty` (columns are
// rows of B), warm-started at `b`, with at most `sweeps` cycles per row.
BStep update_b_moments(const Matrix& gram, const Matrix& xty, double lambda_b,
                       const RegularizationConfig& cfg, int sweeps, Matrix& b, std::vector<LassoCache>* caches)
{
    const Index p = b.rows();
    LassoOptions options{cfg.lasso_tol, sweeps, false};
    std::vector<double> kkt(static_cast<std::size_t>(p), 0.0);
    std::vector<char> done(static_cast<std::size_t>(p), 1);
    parallel_for(static_cast<std::size_t>(p), cfg.threads, [&](std::size_t j) {
        const Index row = static_cast<Index>(j);
        const Vector init = b.row(row).transpose();
        LassoCache* cache = caches ? &(*caches)[j] : nullptr;
        LassoSolution sol = lasso_covariance_cd(gram, xty.col(row), lambda_b, init, options, cache);
        b.row(row) = sol.beta.transpose();
        kkt[j] = sol.kkt_residual;
        done[j] = sol.converged ? 1 : 0;
    });
    BStep step;
    step.max_kkt = *std::max_element(kkt.begin(), kkt.end());
    step.converged = std::all_of(done.begin(), done.end(), [](char c) { return c != 0; });
    return step;
}

BStep update_b(const LagDesign& design, const DesignMoments& moments, const Matrix& theta, double lambda_b,
               const RegularizationConfig& cfg, int sweeps, Matrix& b)
{
    const double t = static_cast<double>(design.effective_rows());
    const Matrix xty = moments.cross - design.predictors.transpose() * theta / t;
    return update_b_moments(moments.gram, xty, lambda_b, cfg, sweeps, b, nullptr);
}

double loss_term(const LagDesign& design, const Matrix& b, const Matrix& theta)
{
    return fit_residual(design, b, theta).squaredNorm() / (2.0 * static_cast<double>(design.effective_rows()));
}

bool record(ModelFit& fit, double value, double outer_tol)
{
    if (!std::isfinite(value)) throw NumericError("objective became non-finite");
    bool stop = false;
    if (!fit.objective_trace.empty()) {
        const double prev = fit.objective_trace.back();
        if (value > prev + 1e-10 * std::abs(prev)) fit.monotone = false;
        const double rel = (prev - value) / std::max(std::abs(prev), std::numeric_limits<double>::min());
        stop = rel < outer_tol;
    }
    fit.objective_trace.push_back(value);
    return stop;
}

// Shared alternation of the Lagrangian and box programs: Theta-step via
// `theta_step(R)` returning (Theta, ||Theta||_*), then the B-step.
template <class ThetaStep>
ModelFit alternate_convex(const LagDesign& design, const RegularizationConfig& cfg,
                          const std::optional<FitStart>& start, FitMode mode, ThetaStep theta_step)
{
    const Index p = design.series();
    const double t = static_cast<double>(design.effective_rows());
    const double lambda_theta = *cfg.lambda_theta;
    const DesignMoments moments = compute_moments(design);

    ModelFit fit;
    fit.mode = mode;
    fit.lags = design.lags;
    fit.lambda_b = cfg.lambda_b;
    fit.lambda_theta = lambda_theta;
    fit.degenerate_input = is_degenerate(design);

    Matrix b = Matrix::Zero(p, design.predictors.cols());
    Matrix theta = Matrix::Zero(design.effective_rows(), p);
    if (start) {
        check_shapes(design, start->b, start->theta);
        b = start->b;
        theta = start->theta;
    }

    for (int m = 1; m <= cfg.max_outer_iters; ++m) {
        const Matrix lag_adjusted = design.response - design.predictors * b.transpose();
        auto [next_theta, nuclear] = theta_step(lag_adjusted);
        theta = std::move(next_theta);
        fit.max_kkt_residual = update_b(design, moments, theta, cfg.lambda_b, cfg, cfg.lasso_max_iters, b).max_kkt;
        const double value =
            loss_term(design, b, theta) + cfg.lambda_b * b.lpNorm<1>() + lambda_theta * nuclear / std::sqrt(t);
        fit.iterations = m;
        if (record(fit, value, cfg.outer_tol)) {
            fit.converged = true;
            break;
        }
    }
    fit.b_hat = std::move(b);
    fit.theta_hat = std::move(theta);
    attach_singular_system(fit, cfg.rank_tolerance);
    return fit;
}

} // namespace

DesignMoments compute_moments(const LagDesign& design)
{
    const double t = static_cast<double>(design.effective_rows());
    DesignMoments m;
    m.gram = design.predictors.transpose() * design.predictors / t;
    m.cross = design.predictors.transpose() * design.response / t;
    return m;
}

Matrix fit_residual(const LagDesign& design, const Matrix& b, const Matrix& theta)
{
    check_shapes(design, b, theta);
    return design.response - theta - design.predictors * b.transpose();
}

double objective_empirical(const LagDesign& design, const Matrix& b, const Matrix& theta, double lambda_b)
{
    return loss_term(design, b, theta) + lambda_b * b.lpNorm<1>();
}

double objective_lagrangian(const LagDesign& design, const Matrix& b, const Matrix& theta,
                            const RegularizationConfig& cfg)
{
    const double t = static_cast<double>(design.effective_rows());
    const double lambda_theta = cfg.lambda_theta.value_or(0.0);
    return objective_empirical(design, b, theta, cfg.lambda_b) + lambda_theta * nuclear_norm(theta) / std::sqrt(t);
}

void attach_singular_system(ModelFit& fit, double rank_tolerance)
{
    const Svd svd = thin_svd(fit.theta_hat);
    fit.singular_values = svd.s;
    fit.rank = numerical_rank(svd.s, rank_tolerance);
    fit.right_basis = svd.v.leftCols(fit.rank);
}

ModelFit fit_lagrangian(const LagDesign& design, const RegularizationConfig& cfg, const std::optional<FitStart>& start)
{
    cfg.validate();
    if (!cfg.lambda_theta) throw ValidationError("fit_lagrangian needs lambda_theta");
    const double tau = *cfg.lambda_theta * std::sqrt(static_cast<double>(design.effective_rows()));
    return alternate_convex(design, cfg, start, FitMode::Lagrangian, [tau](const Matrix& r) {
        SvtResult svt = svt_soft(r, tau);
        return std::pair<Matrix, double>(std::move(svt.matrix), svt.values.sum());
    });
}

double box_bound(const LagDesign& design, double phi)
{
    if (!(phi >= 0.0)) throw ValidationError("phi must be >= 0");
    const double t = static_cast<double>(design.effective_rows());
    const double p = static_cast<double>(design.series());
    const double op = operator_norm(design.predictors / std::sqrt(t));
    if (op == 0.0) return std::numeric_limits<double>::infinity();
    return phi / (std::sqrt(t * p) * op);
}

ModelFit fit_box(const LagDesign& design, const RegularizationConfig& cfg, const std::optional<FitStart>& start)
{
    cfg.validate();
    if (!cfg.lambda_theta) throw ValidationError("fit_box needs lambda_theta");
    const double tau = *cfg.lambda_theta * std::sqrt(static_cast<double>(design.effective_rows()));
    const double bound = box_bound(design, cfg.phi);
    ModelFit fit = alternate_convex(design, cfg, start, FitMode::Box, [&](const Matrix& r) {
        // A gradient step of length T on 1/(2T)||R - Theta||^2 lands on R, so
        // each Theta-step is the constrained prox evaluated at R.
        Matrix theta = prox_nuclear_box(r, tau, bound, cfg.inner_tol, cfg.inner_max_iters);
        const double nuclear = nuclear_norm(theta);
        return std::pair<Matrix, double>(std::move(theta), nuclear);
    });
    fit.phi = cfg.phi;
    return fit;
}

ModelFit fit_empirical(const LagDesign& design, double lambda_b, int rank, const RegularizationConfig& cfg)
{
    return fit_empirical(design, compute_moments(design), lambda_b, rank, cfg);
}

ModelFit fit_empirical(const LagDesign& design, const DesignMoments& moments, double lambda_b, int rank,
                       const RegularizationConfig& cfg)
{
    cfg.validate();
    if (!(lambda_b >= 0.0)) throw ValidationError("lambda_b must be >= 0");
    const Index max_rank = std::min(design.effective_rows(), design.series());
    if (rank < 1 || rank > max_rank) {
        throw ValidationError("rank " + std::to_string(rank) + " outside [1, min(T_d, p)] = [1, " +
                              std::to_string(max_rank) + "]");
    }
    if (!design.response.allFinite() || !design.predictors.allFinite()) {
        throw NumericError("design contains non-finite values");
    }

    ModelFit fit;
    fit.mode = FitMode::Empirical;
    fit.lags = design.lags;
    fit.lambda_b = lambda_b;
    fit.rank_r = rank;
    fit.degenerate_input = is_degenerate(design);

    // B-steps hold only the column space U of Theta fixed: minimizing out
    // Theta = P_U (Y - X B^T) leaves a row-separable Lasso with moments
    // X^T (I - P_U) [X, Y] / T. This is still exact block descent, and it
    // stops B and Theta from trading mass slowly inside span(U). After the
    // Theta-step on M = Y - X B^T the loss equals (||M||^2 - sum s^2) / 2T.
    const double t = static_cast<double>(design.effective_rows());
    const Index p = design.series();
    Svd factors = truncated_svd(design.response, rank);
    Matrix b = Matrix::Zero(p, design.predictors.cols());
    auto theta_step = [&](const Matrix& bb, Svd& out) {
        const Matrix adjusted = design.response - design.predictors * bb.transpose();
        out = truncated_svd(adjusted, rank);
        const double loss = std::max(adjusted.squaredNorm() - out.s.squaredNorm(), 0.0) / (2.0 * t);
        return loss + lambda_b * bb.lpNorm<1>();
    };
    // Safeguarded momentum on B: the extrapolated point is kept only when
    // its exact objective is lower, so the trace stays monotone.
    double beta = 0.5;
    Matrix b_prev = b;
    // Inexact B-steps still decrease the objective; convergence is declared
    // only once a B-step finishes within its sweep budget.
    for (int m = 1; m <= cfg.max_outer_iters; ++m) {
        const Matrix xu = design.predictors.transpose() * factors.u;
        const Matrix gram = moments.gram - xu * xu.transpose() / t;
        const Matrix xty = moments.cross - xu * (factors.u.transpose() * design.response) / t;
        const BStep step = update_b_moments(gram, xty, lambda_b, cfg, cfg.b_step_sweeps, b, nullptr);
        double value = theta_step(b, factors);
        if (m > 1) {
            const Matrix b_ext = b + beta * (b - b_prev);
            Svd ext_factors;
            const double ext = theta_step(b_ext, ext_factors);
            if (ext < value) {
                b_prev = b;
                b = b_ext;
                factors = std::move(ext_factors);
                value = ext;
                beta = std::min(1.5 * beta, 4.0);
            } else {
                b_prev = b;
                beta = std::max(0.5 * beta, 0.1);
            }
        } else {
            b_prev = b;
        }
        fit.iterations = m;
        if (record(fit, value, cfg.outer_tol) && step.converged) {
            fit.converged = true;
            break;
        }
    }
    Matrix theta = factors.u * factors.s.asDiagonal() * factors.v.transpose();
    // Final B pass against the returned Theta so B satisfies its Lasso KKT
    // conditions; it can only lower the objective.
    fit.max_kkt_residual = update_b(design, moments, theta, lambda_b, cfg, cfg.lasso_max_iters, b).max_kkt;
    record(fit, objective_empirical(design, b, theta, lambda_b), cfg.outer_tol);

    fit.b_hat = std::move(b);
    fit.theta_hat = std::move(theta);
    // The factors are the singular system; the remaining values are zero.
    fit.singular_values = Vector::Zero(std::min(fit.theta_hat.rows(), fit.theta_hat.cols()));
    fit.singular_values.head(rank) = factors.s;
    fit.rank = numerical_rank(fit.singular_values, cfg.rank_tolerance);
    fit.right_basis = factors.v.leftCols(fit.rank);
    return fit;
}

} // namespace lagfactor
