#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lagfactor/baselines.hpp"
#include "lagfactor/error.hpp"
#include "lagfactor/estimator.hpp"
#include "lagfactor/evaluate.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/io.hpp"
#include "lagfactor/rolling.hpp"
#include "lagfactor/simulate.hpp"
#include "lagfactor/tuning.hpp"

namespace lagfactor::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Solver knobs shared by every command that fits.
struct SolverFlags {
    double outer_tol = 1e-6;
    int max_outer_iters = 200;
    double lasso_tol = 1e-7;
    int lasso_max_iters = 10'000;
    int threads = 1;

    void attach(CLI::App* app)
    {
        app->add_option("--outer-tol", outer_tol, "Relative objective-decrease tolerance")->capture_default_str();
        app->add_option("--max-outer-iters", max_outer_iters, "Outer iteration cap")->capture_default_str();
        app->add_option("--lasso-tol", lasso_tol, "Lasso coordinate-change tolerance")->capture_default_str();
        app->add_option("--lasso-max-iters", lasso_max_iters, "Lasso cycle cap")->capture_default_str();
        app->add_option("--threads", threads, "Worker threads")->capture_default_str();
    }

    RegularizationConfig config() const
    {
        RegularizationConfig cfg;
        cfg.outer_tol = outer_tol;
        cfg.max_outer_iters = max_outer_iters;
        cfg.lasso_tol = lasso_tol;
        cfg.lasso_max_iters = lasso_max_iters;
        cfg.threads = threads;
        return cfg;
    }
};

struct GridFlags {
    std::string criterion = "pic";
    int lambda_count = 20;
    int max_rank = 10;

    void attach(CLI::App* app, const std::string& default_criterion)
    {
        criterion = default_criterion;
        app->add_option("--criterion", criterion, "Tuning criterion")
            ->check(CLI::IsMember({"pic", "pic_star"}))
            ->capture_default_str();
        app->add_option("--lambda-count", lambda_count, "Number of log-spaced lambda_B values")->capture_default_str();
        app->add_option("--max-rank", max_rank, "Largest rank in the step-1 grid")->capture_default_str();
    }
};

fs::path prepare_out_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

template <class Writer>
void write_stream(const fs::path& path, Writer writer)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    writer(f);
    f.flush();
    if (!f) throw IoError("writing '" + path.string() + "' failed");
}

json triplets(const Matrix& m)
{
    json out = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) {
            if (m(r, c) != 0.0) out.push_back({r, c, m(r, c)});
        }
    }
    return out;
}

json vector_json(const Vector& v)
{
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

std::string truth_to_json(const SimulationSetting& s, const GroundTruth& truth)
{
    json j;
    j["setting"] = s.id;
    j["seed"] = s.seed;
    j["kind"] = s.kind == DgpKind::LagAdjusted ? "lag_adjusted" : "state_space";
    j["p"] = s.p;
    j["T"] = s.T;
    j["lags"] = s.lags;
    j["b_shape"] = {truth.b_true.rows(), truth.b_true.cols()};
    j["b_triplets"] = triplets(truth.b_true);
    j["weak_triplets"] = triplets(truth.weak_mask);
    j["loadings_shape"] = {truth.lambda_true.rows(), truth.lambda_true.cols()};
    j["oracle_next"] = vector_json(truth.oracle_next);
    j["realized_strength"] = truth.realized_strength;
    j["loading_scale"] = truth.loading_scale;
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string input;
    std::string out_dir = ".";
    std::string mode = "empirical";
    int lags = 1;
    double lambda_b = 0.0;
    std::optional<int> rank;
    std::optional<double> lambda_theta;
    double phi = 0.0;
    SolverFlags solver;
};

int cmd_fit(const FitArgs& a, std::ostream& out)
{
    const TimeSeriesPanel panel = ingest_csv(a.input);
    const LagDesign design = build_lag_design(panel, a.lags);
    RegularizationConfig cfg = a.solver.config();
    cfg.lags = a.lags;
    cfg.lambda_b = a.lambda_b;
    ModelFit fit;
    if (a.mode == "empirical") {
        if (!a.rank) throw ValidationError("--mode empirical needs --rank");
        cfg.rank_r = *a.rank;
        fit = fit_empirical(design, a.lambda_b, *a.rank, cfg);
    } else {
        if (!a.lambda_theta) throw ValidationError("--mode " + a.mode + " needs --lambda-theta");
        cfg.lambda_theta = *a.lambda_theta;
        if (a.mode == "box") {
            cfg.phi = a.phi;
            fit = fit_box(design, cfg);
        } else {
            fit = fit_lagrangian(design, cfg);
        }
    }
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_text_file(dir / "fit.json", model_fit_to_json(fit, cfg));
    out << "fit: mode=" << a.mode << " rank=" << fit.rank << " iterations=" << fit.iterations
        << " converged=" << (fit.converged ? "yes" : "no") << " -> " << (dir / "fit.json").string() << "\n";
    return kOk;
}

struct TuneArgs {
    std::string input;
    std::string out_dir = ".";
    int lags = 1;
    GridFlags grid;
    SolverFlags solver;
};

TuningResult tune_panel(const TimeSeriesPanel& panel, int lags, const GridFlags& g, const SolverFlags& s,
                        RegularizationConfig& cfg_out)
{
    const LagDesign design = build_lag_design(panel, lags);
    TuningGrid grid = default_grid(design, g.lambda_count, g.max_rank);
    grid.lags = lags;
    RegularizationConfig cfg = s.config();
    cfg.lags = lags;
    TuningResult result = select_two_step(design, grid, cfg, criterion_from_string(g.criterion));
    cfg.lambda_b = result.lambda_opt;
    cfg.rank_r = result.rank_opt;
    cfg_out = cfg;
    return result;
}

int cmd_tune(const TuneArgs& a, std::ostream& out)
{
    const TimeSeriesPanel panel = ingest_csv(a.input);
    RegularizationConfig cfg;
    const TuningResult result = tune_panel(panel, a.lags, a.grid, a.solver, cfg);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_stream(dir / "criterion_table.csv", [&](std::ostream& f) { write_criterion_table_csv(f, result); });
    write_text_file(dir / "tuning.json", tuning_choice_to_json(result, criterion_from_string(a.grid.criterion)));
    write_text_file(dir / "fit.json", model_fit_to_json(result.fit, cfg));
    out << "tune: lambda_opt=" << format_double(result.lambda_opt) << " rank_opt=" << result.rank_opt
        << (result.rank_clamped ? " (clamped)" : "") << " -> " << dir.string() << "\n";
    return kOk;
}

struct ForecastArgs {
    std::string input;
    std::string out_dir = ".";
    std::string fit_path;
    int horizon = 1;
    int lags = 1;
    GridFlags grid;
    SolverFlags solver;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out)
{
    const TimeSeriesPanel panel = ingest_csv(a.input);
    ModelFit fit;
    if (!a.fit_path.empty()) {
        fit = model_fit_from_json(read_text_file(a.fit_path));
    } else {
        // No stored fit: tune on the panel first.
        RegularizationConfig cfg;
        fit = tune_panel(panel, a.lags, a.grid, a.solver, cfg).fit;
    }
    if (fit.b_hat.rows() != panel.cols()) {
        throw DimensionError("fit has " + std::to_string(fit.b_hat.rows()) + " series but the panel has " +
                             std::to_string(panel.cols()));
    }
    const ForecastResult result = forecast_h(panel, fit, a.horizon);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_stream(dir / "forecast.csv", [&](std::ostream& f) { write_forecast_csv(f, result, panel.column_ids()); });
    ForecastResult filtered = result;
    filtered.x_hat = result.z_hat;
    write_stream(dir / "forecast_filtered.csv",
                 [&](std::ostream& f) { write_forecast_csv(f, filtered, panel.column_ids()); });
    out << "forecast: horizon=" << a.horizon << (result.gram_regularized ? " (Gram ridge applied)" : "") << " -> "
        << (dir / "forecast.csv").string() << "\n";
    return kOk;
}

struct SimulateArgs {
    std::string setting = "S0";
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out)
{
    SimulationSetting s = setting_by_name(a.setting);
    if (a.seed) s.seed = *a.seed;
    const SimulatedData data = simulate(s);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_panel_csv(dir / "panel.csv", data.panel);
    write_text_file(dir / "truth.json", truth_to_json(s, data.truth));
    out << "simulate: " << s.id << " seed=" << s.seed << " T+1=" << data.panel.rows() << " p=" << data.panel.cols()
        << " -> " << dir.string() << "\n";
    return kOk;
}

struct BenchArgs {
    std::string setting = "S0";
    std::optional<std::uint64_t> seed;
    int reps = 20;
    std::string out_dir = ".";
    std::string methods = "both";
    GridFlags grid;
    SolverFlags solver;
};

int cmd_bench(const BenchArgs& a, std::ostream& out)
{
    SimulationSetting s = setting_by_name(a.setting);
    if (a.seed) s.seed = *a.seed;
    BenchmarkOptions o;
    o.reps = a.reps;
    o.criterion = criterion_from_string(a.grid.criterion);
    o.lambda_count = a.grid.lambda_count;
    o.max_rank = a.grid.max_rank;
    o.threads = a.solver.threads;
    o.base = a.solver.config();
    o.base.threads = 1;
    o.lag_adjusted = a.methods != "sw";
    o.stock_watson = a.methods != "lag_adj";
    const BenchmarkReport report = run_benchmark(s, o);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_stream(dir / "bench_rows.csv", [&](std::ostream& f) { write_benchmark_rows_csv(f, report); });
    write_text_file(dir / "bench_summary.json", benchmark_summary_to_json(report));
    for (const MethodSummary& m : report.summaries) {
        out << to_string(m.method) << ":";
        for (const MetricSummary& v : m.metrics) {
            if (v.count > 0) out << " " << v.name << "=" << format_double(v.median);
        }
        out << "\n";
    }
    if (report.failures > 0) out << "bench: " << report.failures << " failed replication(s)\n";
    return kOk;
}

struct RollingArgs {
    std::string input;
    std::string out_dir = ".";
    int window = 104;
    int stride = 1;
    int lags = 1;
    GridFlags grid;
    SolverFlags solver;
};

int cmd_rolling(const RollingArgs& a, std::ostream& out)
{
    const TimeSeriesPanel panel = ingest_csv(a.input);
    RollingConfig cfg;
    cfg.window_length = a.window;
    cfg.stride = a.stride;
    cfg.lags = a.lags;
    cfg.criterion = criterion_from_string(a.grid.criterion);
    cfg.lambda_count = a.grid.lambda_count;
    cfg.max_rank = a.grid.max_rank;
    cfg.base = a.solver.config();
    const std::vector<RollingRow> rows = run_rolling(panel, cfg);
    const fs::path dir = prepare_out_dir(a.out_dir);
    write_stream(dir / "rolling.csv", [&](std::ostream& f) { write_rolling_csv(f, rows); });
    json meta;
    meta["windows"] = rows.size();
    meta["window_length"] = a.window;
    meta["stride"] = a.stride;
    meta["lags"] = a.lags;
    meta["criterion"] = a.grid.criterion;
    meta["k_hat"] = "selected rank / (d+1), rounded down";
    meta["b_density"] = "nonzero entries of B / (p * d * p)";
    meta["r2_total"] = "1 - ||X_T - Theta - X_{T-1} B^T||^2 / ||X_T||^2";
    meta["r2_factor"] = "1 - ||X_T - Theta||^2 / ||X_T||^2 (lag contribution dropped from the fitted model)";
    meta["r2_floored"] = "negative R^2 values are reported as 0 and flagged";
    write_text_file(dir / "rolling_meta.json", meta.dump(2) + "\n");
    std::size_t skipped = 0;
    for (const RollingRow& r : rows) skipped += r.skipped ? 1 : 0;
    out << "rolling: " << rows.size() << " window(s), " << skipped << " skipped -> " << (dir / "rolling.csv").string()
        << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

int report_error(std::ostream& err, const std::string& command, const char* kind, const std::string& message,
                 int status)
{
    json j;
    j["error"] = {{"kind", kind}, {"command", command}, {"message", message}, {"exit_code", status}};
    err << j.dump() << "\n";
    return status;
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Lag-adjusted factor models: fitting, tuning, forecasting, simulation and benchmarks", "lagfactor"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI file; [fit], [tune], ... sections hold flags for each command");
    app.config_formatter(std::make_shared<CLI::ConfigINI>());
    app.allow_config_extras(CLI::config_extras_mode::error);

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit one model at fixed tuning parameters");
    fit_cmd->add_option("--input", fit.input, "Panel CSV")->required();
    fit_cmd->add_option("--out-dir", fit.out_dir)->capture_default_str();
    fit_cmd->add_option("--mode", fit.mode, "Estimator")
        ->check(CLI::IsMember({"empirical", "lagrangian", "box"}))
        ->capture_default_str();
    fit_cmd->add_option("--d", fit.lags, "Lag order")->capture_default_str();
    fit_cmd->add_option("--lambda-b", fit.lambda_b, "Lasso penalty on B")->required();
    fit_cmd->add_option("--rank", fit.rank, "Rank of Theta (empirical mode)");
    fit_cmd->add_option("--lambda-theta", fit.lambda_theta, "Nuclear-norm penalty (lagrangian and box modes)");
    fit_cmd->add_option("--phi", fit.phi, "Box radius (box mode)")->capture_default_str();
    fit.solver.attach(fit_cmd);

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune", "Two-step grid search over (lambda_B, rank)");
    tune_cmd->add_option("--input", tune.input, "Panel CSV")->required();
    tune_cmd->add_option("--out-dir", tune.out_dir)->capture_default_str();
    tune_cmd->add_option("--d", tune.lags, "Lag order")->capture_default_str();
    tune.grid.attach(tune_cmd, "pic");
    tune.solver.attach(tune_cmd);

    ForecastArgs fc;
    auto* fc_cmd = app.add_subcommand("forecast", "h-step forecasts from a stored or freshly tuned fit");
    fc_cmd->add_option("--input", fc.input, "Panel CSV")->required();
    fc_cmd->add_option("--out-dir", fc.out_dir)->capture_default_str();
    fc_cmd->add_option("--fit", fc.fit_path, "fit.json from `fit` or `tune`; tunes on the panel when omitted");
    fc_cmd->add_option("--horizon", fc.horizon, "Forecast horizon h")->capture_default_str();
    fc_cmd->add_option("--d", fc.lags, "Lag order when tuning")->capture_default_str();
    fc.grid.attach(fc_cmd, "pic");
    fc.solver.attach(fc_cmd);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Draw one panel from a named simulation setting");
    sim_cmd->add_option("--setting", sim.setting)->check(CLI::IsMember(setting_names()))->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed, "Override the setting's seed");
    sim_cmd->add_option("--out-dir", sim.out_dir)->capture_default_str();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Monte-Carlo comparison against the Stock-Watson baseline");
    bench_cmd->add_option("--setting", bench.setting)->check(CLI::IsMember(setting_names()))->capture_default_str();
    bench_cmd->add_option("--seed", bench.seed, "Base seed (replication r uses seed + r)");
    bench_cmd->add_option("--reps", bench.reps)->capture_default_str();
    bench_cmd->add_option("--out-dir", bench.out_dir)->capture_default_str();
    bench_cmd->add_option("--methods", bench.methods)
        ->check(CLI::IsMember({"both", "lag_adj", "sw"}))
        ->capture_default_str();
    bench.grid.attach(bench_cmd, "pic");
    bench.solver.attach(bench_cmd);

    RollingArgs roll;
    auto* roll_cmd = app.add_subcommand("rolling", "Rolling-window factor counts, connectivity and R^2");
    roll_cmd->add_option("--input", roll.input, "Panel CSV")->required();
    roll_cmd->add_option("--out-dir", roll.out_dir)->capture_default_str();
    roll_cmd->add_option("--window", roll.window, "Window length in rows")->capture_default_str();
    roll_cmd->add_option("--stride", roll.stride, "Rows between window starts")->capture_default_str();
    roll_cmd->add_option("--d", roll.lags, "Lag order")->capture_default_str();
    roll.grid.attach(roll_cmd, "pic_star");
    roll.solver.attach(roll_cmd);

    for (CLI::App* sub : app.get_subcommands({})) sub->configurable();

    std::string command = "lagfactor";
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err); // --help, --help-all
    } catch (const CLI::ParseError& e) {
        if (!app.get_subcommands().empty()) command = app.get_subcommands().front()->get_name();
        return report_error(err, command, "usage", e.what(), kValidation);
    }

    command = app.get_subcommands().front()->get_name();
    try {
        if (*fit_cmd) return cmd_fit(fit, out);
        if (*tune_cmd) return cmd_tune(tune, out);
        if (*fc_cmd) return cmd_forecast(fc, out);
        if (*sim_cmd) return cmd_simulate(sim, out);
        if (*bench_cmd) return cmd_bench(bench, out);
        return cmd_rolling(roll, out);
    } catch (const DimensionError& e) {
        return report_error(err, command, "dimension", e.what(), kValidation);
    } catch (const ValidationError& e) {
        return report_error(err, command, "validation", e.what(), kValidation);
    } catch (const NumericError& e) {
        return report_error(err, command, "numeric", e.what(), kNumeric);
    } catch (const IoError& e) {
        return report_error(err, command, "io", e.what(), kIo);
    } catch (const std::exception& e) {
        return report_error(err, command, "internal", e.what(), kNumeric);
    }
}

} // namespace lagfactor::cli
