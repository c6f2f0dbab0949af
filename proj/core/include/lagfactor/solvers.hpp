#pragma once

#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "lagfactor/core.hpp"

namespace lagfactor {

/// sign(z) * max(|z| - tau, 0).
double soft_threshold(double z, double tau) noexcept;

struct SvtResult {
    Matrix matrix;
    Vector values; // singular values after thresholding, nonincreasing
};

/// Soft singular value thresholding: U diag(max(s - tau, 0)) V^T.
SvtResult svt_soft(const Matrix& m, double tau);

/// Best rank-r approximation in Frobenius norm (top r singular triplets).
SvtResult svt_hard(const Matrix& m, int r);

/// Entrywise clipping to [-bound, bound].
Matrix project_box(const Matrix& m, double bound);

/// argmin_X 1/2 ||X - m||_F^2 + tau ||X||_* subject to ||X||_max <= bound.
/// Solved by proximal Dykstra splitting between svt_soft and project_box;
/// stops once the relative change of the iterate falls below tol.
Matrix prox_nuclear_box(const Matrix& m, double tau, double bound, double tol, int max_iters);

// ---------------------------------------------------------------------------
// Lasso
// ---------------------------------------------------------------------------

/// min_beta 1/(2 scale) ||target - design beta||^2 + lambda ||beta||_1
struct LassoProblem {
    Matrix design;
    Vector target;
    double lambda = 0.0;
    double scale = 0.0; // 0 means design.rows()
};

struct LassoOptions {
    double tol = 1e-7;
    int max_iters = 10'000;
    bool record_objective = false;
};

struct LassoSolution {
    Vector beta;
    double kkt_residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    std::vector<double> cycle_objectives; // filled when record_objective is set
};

/// Factorization of the Gram restricted to the last Newton support; lets
/// repeated solves with the same Gram and support skip refactoring.
struct LassoCache {
    std::vector<Index> support;
    Eigen::LLT<Matrix> llt;
    bool usable = false;
};

/// Cyclic coordinate descent in natural order 1..q, starting from init. After
/// every moving cycle that leaves the support unchanged, an exact Newton step
/// on that support's orthant face (truncated at the first sign change) is
/// tried and kept only if it lowers the objective. Stops when the largest
/// coordinate change of a full cycle is below tol and the KKT residual is
/// below tol, or after max_iters cycles.
LassoSolution lasso_coordinate_descent(const LassoProblem& problem, const Vector& init,
                                       const LassoOptions& options = {});

/// Covariance form of the same solver. gram = X^T X / scale and
/// xty = X^T y / scale; the objective is 1/2 b^T G b - b^T c + lambda |b|_1
/// up to the constant ||y||^2 / (2 scale).
LassoSolution lasso_covariance_cd(const Matrix& gram, const Vector& xty, double lambda,
                                  const Vector& init, const LassoOptions& options = {},
                                  LassoCache* cache = nullptr);

/// KKT residual of beta for the covariance-form problem.
double lasso_kkt_residual(const Matrix& gram, const Vector& xty, double lambda, const Vector& beta);

} // namespace lagfactor
