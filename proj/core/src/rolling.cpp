#include "lagfactor/rolling.hpp"

#include <istream>
#include <ostream>

#include "lagfactor/error.hpp"
#include "lagfactor/estimator.hpp"
#include "lagfactor/io.hpp"
#include "lagfactor/parallel.hpp"

namespace lagfactor {

namespace {

std::string midpoint_label(const TimeSeriesPanel& panel, Index start, Index length)
{
    const Index mid = start + (length - 1) / 2;
    const auto& ts = panel.timestamps();
    return ts ? (*ts)[static_cast<std::size_t>(mid)] : std::to_string(mid);
}

std::string constant_column(const TimeSeriesPanel& window)
{
    const Matrix& v = window.values();
    for (Index j = 0; j < v.cols(); ++j) {
        if ((v.col(j).array() == v(0, j)).all()) return window.column_ids()[static_cast<std::size_t>(j)];
    }
    return {};
}

double floored(double r2, bool& flag)
{
    if (r2 < 0.0) {
        flag = true;
        return 0.0;
    }
    return r2;
}

RollingRow fit_window(const TimeSeriesPanel& panel, Index start, const RollingConfig& cfg)
{
    RollingRow row;
    row.window_start = start;
    row.midpoint = midpoint_label(panel, start, cfg.window_length);
    const TimeSeriesPanel window = panel.slice_rows(start, cfg.window_length);
    const std::string constant = constant_column(window);
    if (!constant.empty()) {
        row.skipped = true;
        row.note = "constant column '" + constant + "'";
        return row;
    }

    const LagDesign design = build_lag_design(window, cfg.lags);
    RegularizationConfig fit_cfg = cfg.base;
    fit_cfg.lags = cfg.lags;
    fit_cfg.threads = 1;
    const TuningGrid grid = default_grid(design, cfg.lambda_count, cfg.max_rank);
    const TuningResult tuned = select_two_step(design, grid, fit_cfg, cfg.criterion);
    const ModelFit& fit = tuned.fit;

    row.k_hat = tuned.rank_opt / (cfg.lags + 1);
    row.b_density = static_cast<double>((fit.b_hat.array() != 0.0).count()) / static_cast<double>(fit.b_hat.size());
    const double total = design.response.squaredNorm();
    const double res_full = fit_residual(design, fit.b_hat, fit.theta_hat).squaredNorm();
    const double res_factor = (design.response - fit.theta_hat).squaredNorm();
    row.r2_total = floored(1.0 - res_full / total, row.r2_floored);
    row.r2_factor = floored(1.0 - res_factor / total, row.r2_floored);
    if (tuned.rank_clamped) row.note = "inflated rank clamped";
    return row;
}

} // namespace

std::vector<RollingRow> run_rolling(const TimeSeriesPanel& panel, const RollingConfig& cfg)
{
    if (cfg.lags < 1) throw ValidationError("rolling: d must be >= 1");
    if (cfg.window_length < cfg.lags + 2) {
        throw ValidationError("rolling: window length must be >= d + 2 = " + std::to_string(cfg.lags + 2));
    }
    if (cfg.stride < 1) throw ValidationError("rolling: stride must be >= 1");
    if (panel.rows() < cfg.window_length) {
        throw ValidationError("rolling: panel has " + std::to_string(panel.rows()) + " rows, window needs " +
                              std::to_string(cfg.window_length));
    }
    const Index count = (panel.rows() - cfg.window_length) / cfg.stride + 1;
    std::vector<RollingRow> rows(static_cast<std::size_t>(count));
    parallel_for(rows.size(), cfg.base.threads, [&](std::size_t i) {
        rows[i] = fit_window(panel, static_cast<Index>(i) * cfg.stride, cfg);
    });
    return rows;
}

void write_rolling_csv(std::ostream& out, const std::vector<RollingRow>& rows)
{
    out << "window_start,midpoint,k_hat,b_density,r2_total,r2_factor,r2_floored,skipped,note\n";
    for (const auto& r : rows) {
        out << r.window_start << ',' << quote_csv_field(r.midpoint) << ',' << r.k_hat << ','
            << format_double(r.b_density) << ',' << format_double(r.r2_total) << ',' << format_double(r.r2_factor)
            << ',' << (r.r2_floored ? 1 : 0) << ',' << (r.skipped ? 1 : 0) << ',' << quote_csv_field(r.note) << '\n';
    }
}

std::vector<RollingRow> read_rolling_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw IoError("rolling csv: missing header");
    std::vector<RollingRow> out;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv_record(line);
        const std::string where = "rolling csv line " + std::to_string(n);
        if (cells.size() != 9) throw IoError(where + ": expected 9 fields");
        try {
            RollingRow r;
            r.window_start = std::stol(cells[0]);
            r.midpoint = cells[1];
            r.k_hat = std::stoi(cells[2]);
            r.b_density = std::stod(cells[3]);
            r.r2_total = std::stod(cells[4]);
            r.r2_factor = std::stod(cells[5]);
            r.r2_floored = cells[6] == "1";
            r.skipped = cells[7] == "1";
            r.note = cells[8];
            out.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw IoError(where + ": malformed number");
        }
    }
    return out;
}

} // namespace lagfactor
