#include "lagfactor/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>

#include "lagfactor/baselines.hpp"
#include "lagfactor/error.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/linalg.hpp"
#include "lagfactor/parallel.hpp"

namespace lagfactor {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": shapes " + std::to_string(a.rows()) + "x" +
                             std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + " differ");
    }
}

void require_orthonormal(const Matrix& u, const char* what)
{
    const Matrix gram = u.transpose() * u;
    if ((gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() > 1e-8) {
        throw ValidationError(std::string(what) + " is not orthonormal");
    }
}

} // namespace

SupportMetrics support_metrics(const Matrix& b_hat, const Matrix& b_true, const Matrix& weak_mask)
{
    require_same_shape(b_hat, b_true, "support_metrics");
    require_same_shape(weak_mask, b_true, "support_metrics weak mask");
    long tp = 0, fn = 0, tn = 0, fp = 0;
    for (Index j = 0; j < b_true.cols(); ++j) {
        for (Index i = 0; i < b_true.rows(); ++i) {
            const bool positive = b_true(i, j) != 0.0 && weak_mask(i, j) == 0.0;
            const bool found = b_hat(i, j) != 0.0;
            if (positive) {
                found ? ++tp : ++fn;
            } else {
                found ? ++fp : ++tn;
            }
        }
    }
    SupportMetrics out;
    out.sen = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn)
                          : std::numeric_limits<double>::quiet_NaN();
    out.spc = tn + fp > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp)
                          : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double relative_frobenius(const Matrix& est, const Matrix& truth)
{
    require_same_shape(est, truth, "relative_frobenius");
    const double denom = truth.norm();
    if (!(denom > 0.0)) throw ValidationError("relative_frobenius: truth has zero norm");
    return (est - truth).norm() / denom;
}

std::optional<double> projection_error(const Matrix& theta_hat, const Matrix& theta_true, double rel_tol)
{
    require_same_shape(theta_hat, theta_true, "projection_error");
    if (theta_true.cols() >= theta_true.rows()) return std::nullopt;
    const Matrix q_hat = column_space_basis(theta_hat, rel_tol);
    const Matrix q_true = column_space_basis(theta_true, rel_tol);
    if (q_true.cols() == 0) throw ValidationError("projection_error: theta_true is zero");
    if (q_hat.cols() == 0) throw ValidationError("projection_error: theta_hat is zero");
    // ||P - Q||_F^2 = r_hat + r_true - 2 ||Q_hat^T Q_true||_F^2
    const double overlap = (q_hat.transpose() * q_true).squaredNorm();
    const double diff_sq = std::max(0.0, static_cast<double>(q_hat.cols() + q_true.cols()) - 2.0 * overlap);
    return std::sqrt(diff_sq) / std::sqrt(static_cast<double>(q_true.cols()));
}

SinThetaCheck sin_theta_check(const Matrix& u_hat, const Matrix& u_true)
{
    require_same_shape(u_hat, u_true, "sin_theta_check");
    require_orthonormal(u_hat, "u_hat");
    require_orthonormal(u_true, "u_true");
    const Vector cosines = thin_svd(u_hat.transpose() * u_true).s;
    SinThetaCheck out;
    for (Index i = 0; i < cosines.size(); ++i) out.sin_theta_frob_sq += 1.0 - cosines(i) * cosines(i);
    out.half_proj_diff_sq =
        0.5 * (u_hat * u_hat.transpose() - u_true * u_true.transpose()).squaredNorm();
    return out;
}

double common_space_error(const Matrix& common_estimate, const LagDesign& design, const GroundTruth& truth)
{
    require_same_shape(truth.b_true, Matrix(design.series(), design.predictors.cols()), "common_space_error B");
    const Matrix common_true = design.predictors * truth.b_true.transpose() + truth.theta_true;
    return relative_frobenius(common_estimate, common_true);
}

double forecast_error_vs_oracle(const Vector& x_hat_next, const GroundTruth& truth)
{
    if (x_hat_next.size() != truth.oracle_next.size()) {
        throw DimensionError("forecast_error_vs_oracle: length mismatch");
    }
    const double denom = truth.oracle_next.squaredNorm();
    if (!(denom > 0.0)) throw ValidationError("forecast_error_vs_oracle: oracle has zero norm");
    return (x_hat_next - truth.oracle_next).squaredNorm() / denom;
}

std::string to_string(Method m)
{
    return m == Method::LagAdjusted ? "lag_adj" : "sw";
}

const MetricSummary* MethodSummary::find(const std::string& name) const
{
    for (const auto& m : metrics) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

double median(std::vector<double> values)
{
    if (values.empty()) throw ValidationError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<EvaluationReport> run_replication(const SimulationSetting& setting, int rep,
                                              const BenchmarkOptions& options)
{
    SimulationSetting s = setting;
    s.seed = setting.seed + static_cast<std::uint64_t>(rep);
    const SimulatedData data = simulate(s);
    const int d = s.kind == DgpKind::StateSpace ? 1 : s.lags;
    const LagDesign design = build_lag_design(data.panel, d);
    const GroundTruth& truth = data.truth;
    const bool has_b = truth.b_true.cwiseAbs().maxCoeff() > 0.0;

    std::vector<EvaluationReport> out;
    using clock = std::chrono::steady_clock;

    if (options.lag_adjusted) {
        const auto start = clock::now();
        RegularizationConfig cfg = options.base;
        cfg.lags = d;
        const TuningGrid grid = default_grid(design, options.lambda_count, options.max_rank);
        const TuningResult tuned = select_two_step(design, grid, cfg, options.criterion);
        const ModelFit& fit = tuned.fit;
        const ForecastResult fc = forecast_h(data.panel, fit, 1);

        EvaluationReport r;
        r.setting_id = s.id;
        r.replication = rep;
        r.method = Method::LagAdjusted;
        const SupportMetrics sm = support_metrics(fit.b_hat, truth.b_true, truth.weak_mask);
        if (!std::isnan(sm.sen)) r.sen = sm.sen;
        if (!std::isnan(sm.spc)) r.spc = sm.spc;
        if (has_b) r.rerr_b = relative_frobenius(fit.b_hat, truth.b_true);
        r.rerr_theta = relative_frobenius(fit.theta_hat, truth.theta_true);
        r.projerr_theta = projection_error(fit.theta_hat, truth.theta_true, cfg.rank_tolerance);
        r.rerr_common = common_space_error(fit.theta_hat + design.predictors * fit.b_hat.transpose(), design, truth);
        r.forecast_err = forecast_error_vs_oracle(fc.x_hat.row(0).transpose(), truth);
        r.k_hat = static_cast<double>(tuned.rank_opt / (d + 1));
        r.b_density = static_cast<double>((fit.b_hat.array() != 0.0).count()) /
                      static_cast<double>(fit.b_hat.size());
        r.seconds = std::chrono::duration<double>(clock::now() - start).count();
        out.push_back(std::move(r));
    }

    if (options.stock_watson) {
        const auto start = clock::now();
        const int k = s.kind == DgpKind::StateSpace ? s.dim_f : s.K;
        const int cap = static_cast<int>(std::min(design.effective_rows(), design.series()));
        const SwSearchResult sw = sw_rank_search(data.panel, truth, std::min(k, cap), std::min(2 * k, cap), d);

        EvaluationReport r;
        r.setting_id = s.id;
        r.replication = rep;
        r.method = Method::StockWatson;
        r.rerr_common = sw.common_error;
        r.forecast_err = sw.forecast_error;
        r.seconds = std::chrono::duration<double>(clock::now() - start).count();
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

MetricSummary summarize(const std::string& name, const std::vector<double>& values)
{
    MetricSummary m;
    m.name = name;
    m.count = static_cast<int>(values.size());
    if (values.empty()) return m;
    m.median = median(values);
    if (values.size() > 1) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        m.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

} // namespace

BenchmarkReport run_benchmark(const SimulationSetting& setting, const BenchmarkOptions& options)
{
    if (options.reps < 1) throw ValidationError("benchmark needs reps >= 1");
    if (!options.lag_adjusted && !options.stock_watson) throw ValidationError("benchmark needs at least one method");
    setting.validate();

    BenchmarkOptions inner = options;
    if (options.threads > 1 && options.reps > 1) inner.base.threads = 1;
    const int outer_threads = options.reps > 1 ? options.threads : 1;
    if (options.reps == 1) inner.base.threads = std::max(options.threads, inner.base.threads);

    std::vector<std::vector<EvaluationReport>> per_rep(static_cast<std::size_t>(options.reps));
    std::vector<std::string> errors(static_cast<std::size_t>(options.reps));
    parallel_for(per_rep.size(), outer_threads, [&](std::size_t i) {
        try {
            per_rep[i] = run_replication(setting, static_cast<int>(i), inner);
        } catch (const std::exception& e) {
            errors[i] = std::string("replication ") + std::to_string(i) + ": " + e.what();
        }
    });

    BenchmarkReport report;
    report.setting = setting;
    for (std::size_t i = 0; i < per_rep.size(); ++i) {
        if (!errors[i].empty()) {
            ++report.failures;
            report.failure_messages.push_back(errors[i]);
            continue;
        }
        for (auto& row : per_rep[i]) report.rows.push_back(std::move(row));
    }
    if (5 * report.failures > options.reps) {
        std::string msg = "benchmark " + setting.id + ": " + std::to_string(report.failures) + " of " +
                          std::to_string(options.reps) + " replications failed";
        if (!report.failure_messages.empty()) msg += "; first: " + report.failure_messages.front();
        throw NumericError(msg);
    }

    for (Method method : {Method::LagAdjusted, Method::StockWatson}) {
        if ((method == Method::LagAdjusted && !options.lag_adjusted) ||
            (method == Method::StockWatson && !options.stock_watson)) {
            continue;
        }
        std::map<std::string, std::vector<double>> cols;
        const std::vector<std::string> order = {"sen", "spc", "rerr_b", "rerr_theta", "projerr_theta",
                                                "rerr_common", "forecast_err", "k_hat", "b_density", "seconds"};
        for (const auto& row : report.rows) {
            if (row.method != method) continue;
            auto add = [&](const std::string& name, const std::optional<double>& v) {
                if (v) cols[name].push_back(*v);
            };
            add("sen", row.sen);
            add("spc", row.spc);
            add("rerr_b", row.rerr_b);
            add("rerr_theta", row.rerr_theta);
            add("projerr_theta", row.projerr_theta);
            add("rerr_common", row.rerr_common);
            add("forecast_err", row.forecast_err);
            add("k_hat", row.k_hat);
            add("b_density", row.b_density);
            add("seconds", row.seconds);
        }
        MethodSummary summary;
        summary.method = method;
        for (const auto& name : order) {
            auto it = cols.find(name);
            if (it != cols.end()) summary.metrics.push_back(summarize(name, it->second));
        }
        report.summaries.push_back(std::move(summary));
    }
    return report;
}

} // namespace lagfactor
