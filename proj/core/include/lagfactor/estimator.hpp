#pragma once

#include <optional>

#include "lagfactor/core.hpp"

namespace lagfactor {

/// Second moments of a lag design reused by every fit on it:
/// gram = X_{T-1}^T X_{T-1} / T_d and cross = X_{T-1}^T X_T / T_d.
struct DesignMoments {
    Matrix gram;  // dp x dp
    Matrix cross; // dp x p
};

DesignMoments compute_moments(const LagDesign& design);

/// Optional starting point for the alternating schemes.
struct FitStart {
    Matrix b;     // p x dp
    Matrix theta; // T_d x p
};

/// 1/(2T) ||X_T - Theta - X_{T-1} B^T||_F^2 + lambda_B ||B||_1 + lambda_Theta ||Theta / sqrt(T)||_*
double objective_lagrangian(const LagDesign& design, const Matrix& b, const Matrix& theta,
                            const RegularizationConfig& cfg);

/// 1/(2T) ||X_T - Theta - X_{T-1} B^T||_F^2 + lambda_B ||B||_1 (the rank-constrained objective).
double objective_empirical(const LagDesign& design, const Matrix& b, const Matrix& theta, double lambda_b);

/// Residual X_T - Theta - X_{T-1} B^T.
Matrix fit_residual(const LagDesign& design, const Matrix& b, const Matrix& theta);

/// Convex program with nuclear-norm and l1 penalties, solved by exact block
/// minimization: Theta <- svt_soft(X_T - X_{T-1} B^T, lambda_Theta sqrt(T)),
/// then row-wise Lasso for B. B starts at zero unless `start` is given.
ModelFit fit_lagrangian(const LagDesign& design, const RegularizationConfig& cfg,
                        const std::optional<FitStart>& start = std::nullopt);

/// Rank-constrained alternating scheme. Theta starts at the best rank-r
/// approximation of X_T; then B-step (row-wise Lasso) and Theta-step
/// (svt_hard of the lag-adjusted response) alternate.
ModelFit fit_empirical(const LagDesign& design, double lambda_b, int rank, const RegularizationConfig& cfg);
ModelFit fit_empirical(const LagDesign& design, const DesignMoments& moments, double lambda_b, int rank,
                       const RegularizationConfig& cfg);

/// Box radius phi / (sqrt(T p) ||X_{T-1}/sqrt(T)||_op) on the entries of Theta.
double box_bound(const LagDesign& design, double phi);

/// Convex program of fit_lagrangian with the additional entrywise bound
/// ||Theta||_max <= box_bound(design, cfg.phi).
ModelFit fit_box(const LagDesign& design, const RegularizationConfig& cfg,
                 const std::optional<FitStart>& start = std::nullopt);

/// Fills singular_values, right_basis and rank of `fit` from its theta_hat.
void attach_singular_system(ModelFit& fit, double rank_tolerance);

} // namespace lagfactor
