#pragma once

#include "lagfactor/core.hpp"

namespace lagfactor {

struct ForecastResult {
    Matrix x_hat; // h x p
    Matrix z_hat; // h x p
    int horizon = 0;
    bool gram_regularized = false;
};

/// Rows z_t = x_t - sum_k B_k x_{t-k} for every t with a full lag history.
Matrix filtered_process(const TimeSeriesPanel& panel, const Matrix& b_hat, int lags);

/// (1 / (T - h)) sum_{t > h} z_t z_{t-h}^T, no mean removal.
Matrix sample_cross_cov(const Matrix& z, int h);

/// h-step forecasts by projecting the filtered process on the estimated
/// factor space and re-adding the lag contribution recursively:
///   z_{T+i} = Gamma(i) V (V^T Gamma(0) V)^{-1} V^T z_T
///   x_{T+i} = z_{T+i} + sum_k B_k x_{T+i-k}
ForecastResult forecast_h(const TimeSeriesPanel& panel, const ModelFit& fit, int horizon);

} // namespace lagfactor
