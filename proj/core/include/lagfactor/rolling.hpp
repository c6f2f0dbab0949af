#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lagfactor/core.hpp"
#include "lagfactor/tuning.hpp"

namespace lagfactor {

struct RollingConfig {
    Index window_length = 104;
    Index stride = 1;
    int lags = 1;
    Criterion criterion = Criterion::PicStar;
    int lambda_count = 20;
    int max_rank = 10;
    RegularizationConfig base;
};

struct RollingRow {
    Index window_start = 0;
    std::string midpoint;
    int k_hat = 0;
    double b_density = 0.0;
    double r2_total = 0.0;
    double r2_factor = 0.0;
    bool r2_floored = false;
    bool skipped = false; // constant column in window; no fit
    std::string note;
};

/// Tunes and fits every window [s, s + window_length) for
/// s = 0, stride, 2 stride, ... and reports factor count, connectivity
/// b_density = ||B||_0 / (p d p) and the two R^2 measures
///   r2_total  = 1 - ||X_T - Theta - X_{T-1} B^T||^2 / ||X_T||^2
///   r2_factor = 1 - ||X_T - Theta||^2 / ||X_T||^2
/// Windows run on base.threads workers; output is in window order.
std::vector<RollingRow> run_rolling(const TimeSeriesPanel& panel, const RollingConfig& cfg);

void write_rolling_csv(std::ostream& out, const std::vector<RollingRow>& rows);
std::vector<RollingRow> read_rolling_csv(std::istream& in);

} // namespace lagfactor
