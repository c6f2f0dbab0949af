#include "lagfactor/baselines.hpp"

#include <algorithm>
#include <limits>

#include "lagfactor/error.hpp"
#include "lagfactor/estimator.hpp"
#include "lagfactor/evaluate.hpp"
#include "lagfactor/solvers.hpp"

namespace lagfactor {

ModelFit sw_pc_fit(const TimeSeriesPanel& panel, int rank, int lags, bool center)
{
    const LagDesign design = build_lag_design(panel, lags);
    const Index max_rank = std::min(design.effective_rows(), design.series());
    if (rank < 1 || rank > max_rank) {
        throw ValidationError("sw_pc_fit: rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) +
                              "]");
    }
    ModelFit fit;
    fit.mode = FitMode::PrincipalComponents;
    fit.lags = lags;
    fit.rank_r = rank;
    fit.b_hat = Matrix::Zero(design.series(), design.predictors.cols());
    if (center) {
        const Eigen::RowVectorXd mean = design.response.colwise().mean();
        const Matrix centered = design.response.rowwise() - mean;
        fit.theta_hat = svt_hard(centered, rank).matrix.rowwise() + mean;
    } else {
        fit.theta_hat = svt_hard(design.response, rank).matrix;
    }
    fit.converged = true;
    fit.iterations = 1;
    fit.objective_trace.push_back(objective_empirical(design, fit.b_hat, fit.theta_hat, 0.0));
    attach_singular_system(fit, RegularizationConfig{}.rank_tolerance);
    return fit;
}

SwSearchResult sw_rank_search(const TimeSeriesPanel& panel, const GroundTruth& truth, int rank_low, int rank_high,
                              int lags)
{
    if (rank_low < 1 || rank_high < rank_low) throw ValidationError("sw_rank_search: empty rank range");
    const LagDesign design = build_lag_design(panel, lags);
    SwSearchResult best;
    best.common_error = std::numeric_limits<double>::infinity();
    best.forecast_error = std::numeric_limits<double>::infinity();
    for (int r = rank_low; r <= rank_high; ++r) {
        const ModelFit fit = sw_pc_fit(panel, r, lags);
        const double common = common_space_error(fit.theta_hat, design, truth);
        if (common < best.common_error) {
            best.common_error = common;
            best.best_common_rank = r;
        }
        if (fit.rank < 1) continue;
        const ForecastResult fc = sw_forecast(panel, fit, 1);
        const double err = forecast_error_vs_oracle(fc.x_hat.row(0).transpose(), truth);
        if (err < best.forecast_error) {
            best.forecast_error = err;
            best.best_forecast_rank = r;
        }
    }
    return best;
}

ForecastResult sw_forecast(const TimeSeriesPanel& panel, const ModelFit& fit, int horizon)
{
    if (fit.b_hat.size() > 0 && fit.b_hat.cwiseAbs().maxCoeff() != 0.0) {
        throw ValidationError("sw_forecast expects a fit with B = 0");
    }
    return forecast_h(panel, fit, horizon);
}

} // namespace lagfactor
