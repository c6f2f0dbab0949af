#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lagfactor/core.hpp"
#include "lagfactor/simulate.hpp"
#include "lagfactor/tuning.hpp"

namespace lagfactor {

struct SupportMetrics {
    double sen = 0.0;
    double spc = 0.0;
};

/// Positives are the strong-support entries of b_true; weak-support entries
/// and zeros are negatives. An estimate is a discovery iff exactly nonzero.
SupportMetrics support_metrics(const Matrix& b_hat, const Matrix& b_true, const Matrix& weak_mask);

double relative_frobenius(const Matrix& est, const Matrix& truth);

/// ||P_hat - P_true||_F / ||P_true||_F for column-space projectors; nullopt
/// when p >= T, where the metric is undefined.
std::optional<double> projection_error(const Matrix& theta_hat, const Matrix& theta_true,
                                       double rel_tol = 1e-8);

struct SinThetaCheck {
    double sin_theta_frob_sq = 0.0;
    double half_proj_diff_sq = 0.0;
};

/// sum (1 - s_i^2) over singular values s of u_hat^T u_true, against
/// 1/2 ||u_hat u_hat^T - u_true u_true^T||_F^2.
SinThetaCheck sin_theta_check(const Matrix& u_hat, const Matrix& u_true);

/// Relative error of an estimated common component against
/// X_{T-1} B_true^T + theta_true.
double common_space_error(const Matrix& common_estimate, const LagDesign& design, const GroundTruth& truth);

/// ||x_hat - x*||^2 / ||x*||^2 against the noise-free next value.
double forecast_error_vs_oracle(const Vector& x_hat_next, const GroundTruth& truth);

enum class Method { LagAdjusted, StockWatson };

std::string to_string(Method m);

struct EvaluationReport {
    std::string setting_id;
    int replication = 0;
    Method method = Method::LagAdjusted;
    std::optional<double> sen;
    std::optional<double> spc;
    std::optional<double> rerr_b;
    std::optional<double> rerr_theta;
    std::optional<double> projerr_theta;
    double rerr_common = 0.0;
    double forecast_err = 0.0;
    std::optional<double> k_hat;
    std::optional<double> b_density;
    double seconds = 0.0;
};

struct MetricSummary {
    std::string name;
    double median = 0.0;
    double sd = 0.0;
    int count = 0;
};

struct MethodSummary {
    Method method = Method::LagAdjusted;
    std::vector<MetricSummary> metrics;

    const MetricSummary* find(const std::string& name) const;
};

struct BenchmarkOptions {
    int reps = 20;
    bool lag_adjusted = true;
    bool stock_watson = true;
    Criterion criterion = Criterion::Pic;
    int threads = 1;              // replications run concurrently
    RegularizationConfig base;    // tolerances for every fit
    int lambda_count = 20;
    int max_rank = 10;
};

struct BenchmarkReport {
    SimulationSetting setting;
    std::vector<EvaluationReport> rows; // per replication and method
    std::vector<MethodSummary> summaries;
    int failures = 0;
    std::vector<std::string> failure_messages;
};

/// Evaluates one replication (seed = setting.seed + rep) for the requested methods.
std::vector<EvaluationReport> run_replication(const SimulationSetting& setting, int rep,
                                              const BenchmarkOptions& options);

/// Runs all replications, aggregates medians and standard deviations.
/// Throws NumericError when more than 20% of replications fail.
BenchmarkReport run_benchmark(const SimulationSetting& setting, const BenchmarkOptions& options);

double median(std::vector<double> values);

} // namespace lagfactor
