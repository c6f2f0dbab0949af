#pragma once

#include "lagfactor/core.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/simulate.hpp"

namespace lagfactor {

/// Principal-components factor fit: rank-r truncated SVD of the response
/// rows x_d..x_T of the lag-d design, with B = 0 (p x dp). When `center` is
/// set the column means are removed before the SVD and added back to
/// theta_hat.
ModelFit sw_pc_fit(const TimeSeriesPanel& panel, int rank, int lags = 1, bool center = false);

struct SwSearchResult {
    double common_error = 0.0;
    double forecast_error = 0.0;
    int best_common_rank = 0;
    int best_forecast_rank = 0;
};

/// Minimum common-space and one-step forecast errors over ranks
/// [rank_low, rank_high], each metric minimized separately.
SwSearchResult sw_rank_search(const TimeSeriesPanel& panel, const GroundTruth& truth, int rank_low, int rank_high,
                              int lags = 1);

/// forecast_h on the principal-components fit (B = 0).
ForecastResult sw_forecast(const TimeSeriesPanel& panel, const ModelFit& fit, int horizon);

} // namespace lagfactor
