#include <benchmark/benchmark.h>

#include "lagfactor/estimator.hpp"
#include "lagfactor/forecast.hpp"
#include "lagfactor/simulate.hpp"
#include "lagfactor/tuning.hpp"

using namespace lagfactor;

namespace {

SimulatedData scaled_s0(int p)
{
    SimulationSetting s = setting_by_name("S0");
    s.p = p;
    s.row_density = 2.0 / p;
    return simulate(s);
}

void BM_FitEmpirical(benchmark::State& state)
{
    const SimulatedData data = scaled_s0(static_cast<int>(state.range(0)));
    const LagDesign d = build_lag_design(data.panel, 1);
    const DesignMoments m = compute_moments(d);
    for (auto _ : state) benchmark::DoNotOptimize(fit_empirical(d, m, 0.05, 4, RegularizationConfig{}));
}
BENCHMARK(BM_FitEmpirical)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitLagrangian(benchmark::State& state)
{
    const SimulatedData data = scaled_s0(static_cast<int>(state.range(0)));
    const LagDesign d = build_lag_design(data.panel, 1);
    RegularizationConfig cfg;
    cfg.lambda_b = 0.05;
    cfg.lambda_theta = 0.3;
    for (auto _ : state) benchmark::DoNotOptimize(fit_lagrangian(d, cfg));
}
BENCHMARK(BM_FitLagrangian)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_TuneSmallGrid(benchmark::State& state)
{
    const SimulatedData data = scaled_s0(50);
    const LagDesign d = build_lag_design(data.panel, 1);
    const TuningGrid grid = default_grid(d, 5, 3);
    for (auto _ : state) benchmark::DoNotOptimize(select_two_step(d, grid, RegularizationConfig{}, Criterion::Pic));
}
BENCHMARK(BM_TuneSmallGrid)->Unit(benchmark::kMillisecond);

void BM_Forecast(benchmark::State& state)
{
    const SimulatedData data = scaled_s0(100);
    const LagDesign d = build_lag_design(data.panel, 1);
    const ModelFit fit = fit_empirical(d, 0.05, 4, RegularizationConfig{});
    for (auto _ : state) benchmark::DoNotOptimize(forecast_h(data.panel, fit, 4));
}
BENCHMARK(BM_Forecast)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
