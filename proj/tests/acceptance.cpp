// Acceptance run: prints one PASS/FAIL line per criterion, then a tally.
// Monte-Carlo criteria use LAGFACTOR_ACCEPTANCE_REPS replications (default 20).
// The exit status is 0 whenever the run completes; the lines are the verdict.
// They are also written to LAGFACTOR_ACCEPTANCE_REPORT (default
// acceptance_report.txt in the working directory).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lagfactor/baselines.hpp"
#include "lagfactor/error.hpp"
#include "lagfactor/estimator.hpp"
#include "lagfactor/evaluate.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/rolling.hpp"
#include "lagfactor/simulate.hpp"
#include "lagfactor/solvers.hpp"
#include "lagfactor/tuning.hpp"
#include "oracles.hpp"

using namespace lagfactor;

namespace {

int g_pass = 0;
int g_fail = 0;
std::ofstream g_report;

void verdict(const std::string& id, const std::string& what, bool ok, const std::string& detail)
{
    (ok ? g_pass : g_fail)++;
    const std::string line = std::string(ok ? "PASS" : "FAIL") + " [" + id + "] " + what + " :: " + detail;
    std::cout << line << std::endl;
    if (g_report) g_report << line << std::endl;
}

std::string fmt(double v, int prec = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

int replications()
{
    if (const char* env = std::getenv("LAGFACTOR_ACCEPTANCE_REPS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 20;
}

void progress(const std::string& msg)
{
    std::cerr << "[acceptance] " << msg << std::endl;
}

std::vector<double> column(const BenchmarkReport& r, Method m, std::optional<double> EvaluationReport::*field)
{
    std::vector<double> out;
    for (const auto& row : r.rows) {
        if (row.method == m && (row.*field).has_value()) out.push_back(*(row.*field));
    }
    return out;
}

std::vector<double> column(const BenchmarkReport& r, Method m, double EvaluationReport::*field)
{
    std::vector<double> out;
    for (const auto& row : r.rows) {
        if (row.method == m) out.push_back(row.*field);
    }
    return out;
}

double med(const std::vector<double>& v)
{
    return v.empty() ? NAN : median(v);
}

BenchmarkReport bench(const std::string& name, int reps, bool sw)
{
    const auto start = std::chrono::steady_clock::now();
    BenchmarkOptions opt;
    opt.reps = reps;
    opt.stock_watson = sw;
    const BenchmarkReport r = run_benchmark(setting_by_name(name), opt);
    progress(name + ": " + std::to_string(reps) + " replications in " +
             fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 0) + " s");
    return r;
}

// Aligns lag-adjusted and SW rows by replication.
std::map<int, std::pair<const EvaluationReport*, const EvaluationReport*>> paired(const BenchmarkReport& r)
{
    std::map<int, std::pair<const EvaluationReport*, const EvaluationReport*>> out;
    for (const auto& row : r.rows) {
        auto& slot = out[row.replication];
        (row.method == Method::LagAdjusted ? slot.first : slot.second) = &row;
    }
    return out;
}

bool trace_monotone(const std::vector<double>& t, double& worst)
{
    bool ok = true;
    for (std::size_t k = 1; k < t.size(); ++k) {
        const double rise = (t[k] - t[k - 1]) / std::max(std::abs(t[k - 1]), 1e-300);
        worst = std::max(worst, rise);
        ok = ok && rise <= 1e-10;
    }
    return ok;
}

// Factor panel with a lag-connected idiosyncratic part on rows [hot_begin, hot_end).
Matrix regime_panel(Index rows, int p, Index hot_begin, Index hot_end, std::uint64_t seed)
{
    Rng rng(seed);
    const Matrix b = gen_sparse_b(p, 2.0 / p, SparsityKind::Exact, 0.5, 0.8, rng).b;
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix f(rows, 2);
    Matrix l(p, 2);
    Matrix e(rows, p);
    for (Index i = 0; i < f.size(); ++i) f.data()[i] = n(rng);
    for (Index i = 0; i < l.size(); ++i) l.data()[i] = n(rng);
    for (Index i = 0; i < e.size(); ++i) e.data()[i] = n(rng);
    Matrix u = e;
    for (Index t = 1; t < rows; ++t) {
        if (t >= hot_begin && t < hot_end) u.row(t) += (b * u.row(t - 1).transpose()).transpose();
    }
    return f * l.transpose() + u;
}

void criterion_1_and_2(int reps)
{
    const BenchmarkReport r = bench("S0", reps, true);
    const double sen = med(column(r, Method::LagAdjusted, &EvaluationReport::sen));
    const double spc = med(column(r, Method::LagAdjusted, &EvaluationReport::spc));
    const double rerr_b = med(column(r, Method::LagAdjusted, &EvaluationReport::rerr_b));
    const double proj = med(column(r, Method::LagAdjusted, &EvaluationReport::projerr_theta));
    const double common = med(column(r, Method::LagAdjusted, &EvaluationReport::rerr_common));
    const double secs = med(column(r, Method::LagAdjusted, &EvaluationReport::seconds));
    const auto k_hat = column(r, Method::LagAdjusted, &EvaluationReport::k_hat);
    const double k_share = k_hat.empty() ? 0.0
                                         : static_cast<double>(std::count(k_hat.begin(), k_hat.end(), 2.0)) /
                                               static_cast<double>(k_hat.size());
    std::vector<std::string> misses;
    if (!(sen >= 0.90)) misses.push_back("SEN");
    if (!(spc >= 0.90)) misses.push_back("SPC");
    if (!(rerr_b <= 0.45)) misses.push_back("RErr_B");
    if (!(proj <= 0.30)) misses.push_back("ProjErr");
    if (!(common <= 0.25)) misses.push_back("common");
    if (!(k_share >= 0.80)) misses.push_back("K_hat");
    if (!(secs <= 60.0)) misses.push_back("runtime");
    std::string miss_text;
    for (const auto& m : misses) miss_text += (miss_text.empty() ? "" : ",") + m;
    verdict("1", "S0 recovery medians", misses.empty(),
            "SEN=" + fmt(sen) + " SPC=" + fmt(spc) + " RErr_B=" + fmt(rerr_b) + " ProjErr=" + fmt(proj) +
                " common=" + fmt(common) + " K_hat=2 share=" + fmt(k_share, 2) + " median_s=" + fmt(secs, 1) +
                " reps=" + std::to_string(reps) + " failures=" + std::to_string(r.failures) +
                (misses.empty() ? "" : " missed=" + miss_text));

    int wins = 0;
    int total = 0;
    for (const auto& [rep, pair] : paired(r)) {
        if (!pair.first || !pair.second) continue;
        ++total;
        if (pair.first->rerr_common < pair.second->rerr_common && pair.first->forecast_err < pair.second->forecast_err) {
            ++wins;
        }
    }
    const double common_sw = med(column(r, Method::StockWatson, &EvaluationReport::rerr_common));
    const double fc_lag = med(column(r, Method::LagAdjusted, &EvaluationReport::forecast_err));
    const double fc_sw = med(column(r, Method::StockWatson, &EvaluationReport::forecast_err));
    const double share = total > 0 ? static_cast<double>(wins) / total : 0.0;
    verdict("2", "S0 lag-adj beats SW on common space and forecast",
            common < common_sw && fc_lag < fc_sw && share >= 0.90,
            "common " + fmt(common) + " vs " + fmt(common_sw) + ", forecast " + fmt(fc_lag) + " vs " + fmt(fc_sw) +
                ", both better in " + std::to_string(wins) + "/" + std::to_string(total));
}

void criterion_3(int reps)
{
    const BenchmarkReport r = bench("S3", reps, true);
    const double lag = med(column(r, Method::LagAdjusted, &EvaluationReport::forecast_err));
    const double sw = med(column(r, Method::StockWatson, &EvaluationReport::forecast_err));
    verdict("3", "S3 forecast error ratio SW / lag-adj >= 1.5", sw / lag >= 1.5,
            "lag-adj=" + fmt(lag) + " SW=" + fmt(sw) + " ratio=" + fmt(sw / lag, 2) + " reps=" + std::to_string(reps));
}

void criterion_4(int reps)
{
    const BenchmarkReport r = bench("F2", reps, true);
    const double lag = med(column(r, Method::LagAdjusted, &EvaluationReport::rerr_common));
    const double sw = med(column(r, Method::StockWatson, &EvaluationReport::rerr_common));
    const double density = med(column(r, Method::LagAdjusted, &EvaluationReport::b_density));
    verdict("4", "F2 common error within 0.03 of SW, B density < 1%",
            std::abs(lag - sw) <= 0.03 && density < 0.01,
            "lag-adj=" + fmt(lag) + " SW=" + fmt(sw) + " density=" + fmt(100.0 * density, 2) + "%");
}

void criterion_11(int reps)
{
    const BenchmarkReport r = bench("D2", reps, false);
    const double sen = med(column(r, Method::LagAdjusted, &EvaluationReport::sen));
    const double spc = med(column(r, Method::LagAdjusted, &EvaluationReport::spc));
    verdict("11", "VAR(2) stacked design support recovery SEN >= 0.85", sen >= 0.85,
            "SEN=" + fmt(sen) + " SPC=" + fmt(spc) + " reps=" + std::to_string(reps));
}

void criterion_5()
{
    std::mt19937_64 rng(505);
    std::uniform_int_distribution<int> p_dist(3, 12);
    std::uniform_int_distribution<int> t_dist(20, 60);
    std::uniform_real_distribution<double> lam(0.01, 0.3);
    int fits = 0;
    int bad = 0;
    double worst = -INFINITY;
    for (int inst = 0; inst < 50; ++inst) {
        const int p = p_dist(rng);
        const int t = t_dist(rng);
        const int d = inst % 5 == 0 ? 2 : 1;
        const Matrix x = oracle::random_matrix(t, 2, rng) * oracle::random_matrix(2, p, rng) +
                         oracle::random_matrix(t, p, rng);
        const LagDesign design = build_lag_design(TimeSeriesPanel(x), d);
        RegularizationConfig cfg;
        cfg.lags = d;
        cfg.lambda_b = lam(rng);
        cfg.lambda_theta = lam(rng);
        const int rank = 1 + inst % std::min(3, p);
        for (const ModelFit& fit : {fit_empirical(design, cfg.lambda_b, rank, cfg), fit_lagrangian(design, cfg)}) {
            ++fits;
            if (!trace_monotone(fit.objective_trace, worst)) ++bad;
        }
    }
    verdict("5", "objective traces nonincreasing (50 instances x 2 algorithms)", bad == 0,
            std::to_string(fits - bad) + "/" + std::to_string(fits) + " monotone, worst relative rise " + sci(worst));
}

void criterion_6()
{
    std::mt19937_64 rng(606);
    double worst = 0.0;
    const int instances = 10;
    for (int inst = 0; inst < instances; ++inst) {
        const Matrix x = oracle::random_matrix(21, 2, rng) * oracle::random_matrix(2, 8, rng) +
                         0.5 * oracle::random_matrix(21, 8, rng);
        const LagDesign design = build_lag_design(TimeSeriesPanel(x), 1);
        RegularizationConfig cfg;
        cfg.lambda_b = 0.05;
        cfg.lambda_theta = 0.2;
        cfg.outer_tol = 1e-12;
        cfg.lasso_tol = 1e-10;
        cfg.max_outer_iters = 20000;
        std::vector<double> finals;
        for (int s = 0; s < 5; ++s) {
            const FitStart start{oracle::random_matrix(8, 8, rng), 3.0 * oracle::random_matrix(20, 8, rng)};
            finals.push_back(fit_lagrangian(design, cfg, start).objective_trace.back());
        }
        const auto [lo, hi] = std::minmax_element(finals.begin(), finals.end());
        worst = std::max(worst, (*hi - *lo) / std::abs(*lo));
    }
    verdict("6", "Lagrangian fit: 5 random starts agree in objective (20x8)", worst <= 1e-6,
            std::to_string(instances) + " instances, worst relative spread " + sci(worst));
}

void criterion_7()
{
    std::mt19937_64 rng(707);
    double lasso_worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index q = 1 + trial % 4;
        const Matrix x = oracle::random_matrix(15 + trial % 10, q, rng);
        const Vector y = x * oracle::random_matrix(q, 1, rng).col(0) + oracle::random_matrix(x.rows(), 1, rng).col(0);
        const double lambda = 0.02 + 0.03 * (trial % 9);
        const LassoSolution s = lasso_coordinate_descent({x, y, lambda, 0.0}, Vector::Zero(q), {1e-12, 100000, false});
        lasso_worst = std::max(lasso_worst, (s.beta - oracle::brute_force_lasso(x, y, lambda)).cwiseAbs().maxCoeff());
    }
    double svt_worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix m = oracle::random_matrix(5 + trial % 11, 3 + trial % 7, rng);
        const double tau = 0.5 * (trial % 5);
        const int r = 1 + trial % static_cast<int>(std::min(m.rows(), m.cols()));
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        svt_worst = std::max(svt_worst, (svt_soft(m, tau).matrix - oracle::shrink_oracle(m, tau)).cwiseAbs().maxCoeff() / scale);
        svt_worst = std::max(svt_worst, (svt_hard(m, r).matrix - oracle::truncate_oracle(m, r)).cwiseAbs().maxCoeff() / scale);
    }
    verdict("7", "solver oracles (Lasso vs enumeration <= 1e-8, SVT vs full SVD <= 1e-10)",
            lasso_worst <= 1e-8 && svt_worst <= 1e-10,
            "lasso max diff " + sci(lasso_worst) + " over 200 problems, svt max diff " + sci(svt_worst));
}

void criterion_8()
{
    std::mt19937_64 rng(808);
    double static_worst = 0.0;
    double split_worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Index p = 4 + trial % 6;
        const Matrix x = oracle::random_matrix(50 + trial, p, rng);
        const TimeSeriesPanel panel(x);
        ModelFit fit;
        fit.lags = 1;
        fit.b_hat = Matrix::Zero(p, p);
        fit.right_basis = oracle::random_orthonormal(p, 1 + trial % 3, rng);
        fit.rank = static_cast<int>(fit.right_basis.cols());
        const ForecastResult fc = forecast_h(panel, fit, 2);
        static_worst = std::max(static_worst,
                                (fc.x_hat - oracle::static_factor_forecast(x, 1, fit.right_basis, 2)).cwiseAbs().maxCoeff());

        fit.b_hat = 0.3 * oracle::random_matrix(p, p, rng);
        const ForecastResult lagged = forecast_h(panel, fit, 1);
        const Vector gap = lagged.x_hat.row(0).transpose() - fit.b_hat * x.row(x.rows() - 1).transpose() -
                           lagged.z_hat.row(0).transpose();
        split_worst = std::max(split_worst, gap.cwiseAbs().maxCoeff() / std::max(1.0, lagged.x_hat.cwiseAbs().maxCoeff()));
    }
    verdict("8", "forecast: B=0 equals static projection oracle; x_hat - B x_T = z_hat",
            static_worst <= 1e-10 && split_worst <= 1e-13,
            "static max diff " + sci(static_worst) + ", decomposition residual " + sci(split_worst) +
                " (floating-point rounding only)");
}

void criterion_9()
{
    std::mt19937_64 rng(909);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Index n = 5 + trial % 20;
        const Index k = 1 + trial % std::min<Index>(4, n - 1);
        const SinThetaCheck c = sin_theta_check(oracle::random_orthonormal(n, k, rng), oracle::random_orthonormal(n, k, rng));
        worst = std::max(worst, std::abs(c.sin_theta_frob_sq - c.half_proj_diff_sq));
    }
    verdict("9", "sin-theta identity on 100 subspace pairs", worst <= 1e-10, "max gap " + sci(worst));
}

void criterion_10()
{
    bool sim_ok = true;
    for (const std::string& name : setting_names()) {
        const SimulationSetting s = setting_by_name(name);
        const SimulatedData a = simulate(s);
        const SimulatedData b = simulate(s);
        sim_ok = sim_ok && a.panel.values() == b.panel.values() && a.truth.theta_true == b.truth.theta_true &&
                 a.truth.oracle_next == b.truth.oracle_next;
    }

    SimulationSetting s = setting_by_name("S0");
    s.p = 40;
    s.T = 120;
    s.row_density = 2.0 / 40.0;
    const SimulatedData data = simulate(s);
    const LagDesign design = build_lag_design(data.panel, 1);
    const TuningGrid grid = default_grid(design, 8, 4);
    RegularizationConfig one;
    RegularizationConfig many;
    many.threads = 4;
    const TuningResult a = select_two_step(design, grid, one, Criterion::Pic);
    const TuningResult b = select_two_step(design, grid, many, Criterion::Pic);
    double diff = (a.fit.b_hat - b.fit.b_hat).cwiseAbs().maxCoeff();
    diff = std::max(diff, (a.fit.theta_hat - b.fit.theta_hat).cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < a.criterion_table.size(); ++i) {
        diff = std::max(diff, std::abs(a.criterion_table[i].value - b.criterion_table[i].value));
    }
    const double fc_diff =
        (forecast_h(data.panel, a.fit, 1).x_hat - forecast_h(data.panel, b.fit, 1).x_hat).cwiseAbs().maxCoeff();
    diff = std::max(diff, fc_diff);

    RollingConfig rc;
    rc.window_length = 60;
    rc.stride = 30;
    rc.lambda_count = 5;
    rc.max_rank = 3;
    const auto r1 = run_rolling(data.panel, rc);
    rc.base.threads = 3;
    const auto r3 = run_rolling(data.panel, rc);
    bool rolling_ok = r1.size() == r3.size();
    for (std::size_t i = 0; rolling_ok && i < r1.size(); ++i) {
        rolling_ok = r1[i].k_hat == r3[i].k_hat && std::abs(r1[i].r2_total - r3[i].r2_total) <= 1e-12 &&
                     r1[i].b_density == r3[i].b_density;
    }
    verdict("10", "determinism (simulation bitwise; 1 vs N threads within 1e-12)",
            sim_ok && diff <= 1e-12 && a.lambda_opt == b.lambda_opt && a.rank_opt == b.rank_opt && rolling_ok,
            std::string("simulation ") + (sim_ok ? "bitwise equal" : "DIFFERS") + ", tuned fit max diff " + sci(diff) +
                ", rolling " + (rolling_ok ? "equal" : "DIFFERS"));
}

void criterion_rolling()
{
    // 7 windows of 104 rows at stride 52; the connected regime fills window 3.
    const Index w = 104;
    const Matrix x = regime_panel(4 * w, 30, 3 * w / 2, 5 * w / 2, 1212);
    RollingConfig rc;
    rc.window_length = w;
    rc.stride = w / 2;
    rc.lambda_count = 10;
    rc.max_rank = 5;
    const auto rows = run_rolling(TimeSeriesPanel(x), rc);
    std::vector<double> flank;
    double planted = 0.0;
    std::string densities;
    for (const auto& r : rows) {
        const Index begin = r.window_start;
        const Index end = begin + w;
        if (begin == 3 * w / 2) planted = r.b_density;
        if (end <= 3 * w / 2 || begin >= 5 * w / 2) flank.push_back(r.b_density);
        densities += (densities.empty() ? "" : " ") + fmt(100.0 * r.b_density, 2);
    }
    const double flank_med = med(flank);
    verdict("R", "rolling: planted connectivity peak >= 3x flank median", planted >= 3.0 * flank_med && planted > 0.0,
            "planted=" + fmt(100.0 * planted, 2) + "% flank median=" + fmt(100.0 * flank_med, 2) +
                "% window densities(%)=[" + densities + "]");
}

template <class F>
void guarded(const std::string& id, const std::string& what, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        verdict(id, what, false, std::string("error: ") + e.what());
    }
}

} // namespace

int main(int argc, char** argv)
{
    const int reps = replications();
    const char* report_path = std::getenv("LAGFACTOR_ACCEPTANCE_REPORT");
    g_report.open(report_path ? report_path : "acceptance_report.txt");
    if (g_report) g_report << "replications: " << reps << std::endl;
    // Optional filter: run only the listed criterion ids, e.g. `lagfactor_acceptance 5 6 7`.
    std::vector<std::string> only(argv + 1, argv + argc);
    auto want = [&](const std::string& id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    if (want("5")) guarded("5", "objective monotonicity", criterion_5);
    if (want("6")) guarded("6", "convex multi-start consistency", criterion_6);
    if (want("7")) guarded("7", "solver oracles", criterion_7);
    if (want("8")) guarded("8", "forecast degeneracy", criterion_8);
    if (want("9")) guarded("9", "sin-theta identity", criterion_9);
    if (want("10")) guarded("10", "determinism", criterion_10);
    if (want("R")) guarded("R", "rolling planted peak", criterion_rolling);
    if (want("1") || want("2")) guarded("1", "S0 benchmark", [&] { criterion_1_and_2(reps); });
    if (want("4")) guarded("4", "F2 benchmark", [&] { criterion_4(reps); });
    if (want("11")) guarded("11", "D2 benchmark", [&] { criterion_11(reps); });
    if (want("3")) guarded("3", "S3 benchmark", [&] { criterion_3(reps); });

    std::cout << "acceptance: " << g_pass << " passed, " << g_fail << " failed" << std::endl;
    if (g_report) g_report << "acceptance: " << g_pass << " passed, " << g_fail << " failed" << std::endl;
    return 0;
}
