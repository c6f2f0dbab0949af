#include "lagfactor/core.hpp"

#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "lagfactor/error.hpp"

namespace lagfactor {

TimeSeriesPanel::TimeSeriesPanel(Matrix values, std::vector<std::string> column_ids,
                                 std::optional<std::vector<std::string>> timestamps)
    : values_(std::move(values)), column_ids_(std::move(column_ids)), timestamps_(std::move(timestamps))
{
    if (values_.rows() < 2 || values_.cols() < 1) {
        throw DimensionError("panel needs at least 2 rows and 1 column, got " + std::to_string(values_.rows()) + "x" +
                             std::to_string(values_.cols()));
    }
    if (!values_.allFinite()) {
        throw ValidationError("panel contains non-finite values");
    }
    if (column_ids_.empty()) {
        column_ids_.reserve(static_cast<std::size_t>(values_.cols()));
        for (Index j = 0; j < values_.cols(); ++j) {
            column_ids_.push_back("x" + std::to_string(j));
        }
    }
    if (static_cast<Index>(column_ids_.size()) != values_.cols()) {
        throw DimensionError("column_ids has " + std::to_string(column_ids_.size()) + " entries for " +
                             std::to_string(values_.cols()) + " columns");
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : column_ids_) {
        if (!seen.insert(id).second) {
            throw ValidationError("duplicate column id '" + id + "'");
        }
    }
    if (timestamps_ && static_cast<Index>(timestamps_->size()) != values_.rows()) {
        throw DimensionError("timestamps has " + std::to_string(timestamps_->size()) + " entries for " +
                             std::to_string(values_.rows()) + " rows");
    }
}

TimeSeriesPanel TimeSeriesPanel::slice_rows(Index start, Index count) const
{
    if (start < 0 || count < 0 || start + count > rows()) {
        throw DimensionError("row slice out of range");
    }
    std::optional<std::vector<std::string>> ts;
    if (timestamps_) {
        ts.emplace(timestamps_->begin() + start, timestamps_->begin() + start + count);
    }
    return TimeSeriesPanel(values_.middleRows(start, count), column_ids_, std::move(ts));
}

LagDesign build_lag_design(const TimeSeriesPanel& panel, int lags)
{
    if (lags < 1) {
        throw ValidationError("lag order must be >= 1");
    }
    const Index n = panel.rows();
    const Index p = panel.cols();
    if (n < lags + 1) {
        throw DimensionError("panel has " + std::to_string(n) + " rows; lag order " + std::to_string(lags) +
                             " needs at least " + std::to_string(lags + 1));
    }
    const Index rows = n - lags;
    const Matrix& x = panel.values();

    LagDesign design;
    design.lags = lags;
    design.response = x.bottomRows(rows);
    design.predictors.resize(rows, lags * p);
    for (int k = 1; k <= lags; ++k) {
        design.predictors.middleCols((k - 1) * p, p) = x.middleRows(lags - k, rows);
    }
    return design;
}

std::string to_string(FitMode mode)
{
    switch (mode) {
    case FitMode::Lagrangian: return "lagrangian";
    case FitMode::Empirical: return "empirical";
    case FitMode::Box: return "box";
    case FitMode::PrincipalComponents: return "principal_components";
    }
    return "unknown";
}

void RegularizationConfig::validate() const
{
    if (!(lambda_b >= 0.0)) throw ValidationError("lambda_b must be >= 0");
    if (lambda_theta && !(*lambda_theta >= 0.0)) throw ValidationError("lambda_theta must be >= 0");
    if (rank_r && *rank_r < 1) throw ValidationError("rank_r must be a positive integer");
    if (!(phi >= 0.0)) throw ValidationError("phi must be >= 0");
    if (lags < 1) throw ValidationError("lag order must be >= 1");
    if (!(outer_tol > 0.0) || !(lasso_tol > 0.0) || !(inner_tol > 0.0) || !(rank_tolerance > 0.0)) {
        throw ValidationError("tolerances must be > 0");
    }
    if (max_outer_iters < 1 || lasso_max_iters < 1 || inner_max_iters < 1 || b_step_sweeps < 1) {
        throw ValidationError("iteration limits must be >= 1");
    }
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

double spectral_radius(const Matrix& m)
{
    if (m.rows() != m.cols()) {
        throw DimensionError("spectral_radius needs a square matrix");
    }
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) throw NumericError("spectral_radius: non-finite input");
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericError("eigenvalue computation did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix companion_matrix(std::span<const Matrix> blocks)
{
    if (blocks.empty()) throw DimensionError("companion_matrix needs at least one block");
    const Index p = blocks.front().rows();
    for (const auto& b : blocks) {
        if (b.rows() != p || b.cols() != p) {
            throw DimensionError("companion_matrix: every block must be " + std::to_string(p) + "x" +
                                 std::to_string(p));
        }
    }
    const Index d = static_cast<Index>(blocks.size());
    Matrix c = Matrix::Zero(d * p, d * p);
    for (Index k = 0; k < d; ++k) {
        c.block(0, k * p, p, p) = blocks[static_cast<std::size_t>(k)];
    }
    if (d > 1) {
        c.bottomLeftCorner((d - 1) * p, (d - 1) * p).setIdentity();
    }
    return c;
}

std::vector<Matrix> split_lag_blocks(const Matrix& stacked, int lags)
{
    if (lags < 1 || stacked.cols() != stacked.rows() * lags) {
        throw DimensionError("expected a p x (d p) coefficient matrix");
    }
    const Index p = stacked.rows();
    std::vector<Matrix> blocks;
    blocks.reserve(static_cast<std::size_t>(lags));
    for (int k = 0; k < lags; ++k) {
        blocks.emplace_back(stacked.middleCols(k * p, p));
    }
    return blocks;
}

Matrix companion_matrix(const Matrix& stacked, int lags)
{
    const auto blocks = split_lag_blocks(stacked, lags);
    return companion_matrix(std::span<const Matrix>(blocks));
}

} // namespace lagfactor
