#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lagfactor {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Panels and lag designs
// ---------------------------------------------------------------------------

/// T x p block of observations, rows ordered in time.
///
/// Construction validates the invariants: every entry finite, at least two
/// rows, at least one column, unique column identifiers (defaulted to
/// "x0", "x1", ... when omitted) and, if given, one timestamp per row.
class TimeSeriesPanel {
public:
    explicit TimeSeriesPanel(Matrix values,
                             std::vector<std::string> column_ids = {},
                             std::optional<std::vector<std::string>> timestamps = std::nullopt);

    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& column_ids() const noexcept { return column_ids_; }
    const std::optional<std::vector<std::string>>& timestamps() const noexcept { return timestamps_; }

    Index rows() const noexcept { return values_.rows(); }
    Index cols() const noexcept { return values_.cols(); }

    /// Contiguous block of rows [start, start + count).
    TimeSeriesPanel slice_rows(Index start, Index count) const;

private:
    Matrix values_;
    std::vector<std::string> column_ids_;
    std::optional<std::vector<std::string>> timestamps_;
};

/// Response/predictor pair for a VAR(d) regression on a panel of T+1 rows.
///
/// Row t of `response` is x_{t}; row t of `predictors` is
/// [x_{t-1} | x_{t-2} | ... | x_{t-d}]. With T+1 raw rows the effective
/// sample size is T_d = T - d + 1.
struct LagDesign {
    Matrix response;   // T_d x p
    Matrix predictors; // T_d x (d p)
    int lags = 1;

    Index effective_rows() const noexcept { return response.rows(); }
    Index series() const noexcept { return response.cols(); }
};

LagDesign build_lag_design(const TimeSeriesPanel& panel, int lags);

// ---------------------------------------------------------------------------
// Model fit and configuration
// ---------------------------------------------------------------------------

enum class FitMode { Lagrangian, Empirical, Box, PrincipalComponents };

std::string to_string(FitMode mode);

/// Estimated transition block and factor hyperplane, plus diagnostics.
struct ModelFit {
    FitMode mode = FitMode::Empirical;
    int lags = 1;
    Matrix b_hat;           // p x (d p), [B_1 ... B_d]
    Matrix theta_hat;       // T_d x p
    Vector singular_values; // of theta_hat, nonincreasing
    Matrix right_basis;     // p x rank, orthonormal
    int rank = 0;
    std::vector<double> objective_trace;
    bool converged = false;
    int iterations = 0;

    // Diagnostics.
    double lambda_b = 0.0;
    std::optional<double> lambda_theta;
    std::optional<int> rank_r;
    std::optional<double> phi;
    double max_kkt_residual = 0.0;
    bool monotone = true; // objective_trace never rose by more than 1e-10 relative
    bool degenerate_input = false;
};

/// Tuning parameters and solver tolerances shared by the estimators.
struct RegularizationConfig {
    double lambda_b = 0.0;
    std::optional<double> lambda_theta; // Lagrangian and box modes
    std::optional<int> rank_r;          // rank-constrained mode
    double phi = 0.0;                   // box radius, box mode only
    int lags = 1;

    double outer_tol = 1e-6;
    int max_outer_iters = 200;
    double lasso_tol = 1e-7;
    int lasso_max_iters = 10'000;
    // Coordinate sweeps per B-step inside the rank-constrained alternation;
    // the final B-step always runs to lasso_tol.
    int b_step_sweeps = 25;
    double inner_tol = 1e-10;
    int inner_max_iters = 5'000;
    double rank_tolerance = 1e-8;
    int threads = 1;

    /// Throws ValidationError when a tolerance or penalty is out of range.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Stationarity helpers
// ---------------------------------------------------------------------------

/// Largest eigenvalue modulus of a square matrix.
double spectral_radius(const Matrix& m);

/// Block companion matrix of a VAR(d): top block row [B_1 ... B_d], identity
/// blocks on the first sub-diagonal.
Matrix companion_matrix(std::span<const Matrix> blocks);

/// Same, from the concatenated p x (d p) coefficient matrix.
Matrix companion_matrix(const Matrix& stacked, int lags);

/// Splits a p x (d p) matrix into its d square blocks.
std::vector<Matrix> split_lag_blocks(const Matrix& stacked, int lags);

} // namespace lagfactor
