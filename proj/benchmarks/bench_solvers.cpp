#include <benchmark/benchmark.h>

#include <random>

#include "lagfactor/linalg.hpp"
#include "lagfactor/solvers.hpp"

using namespace lagfactor;

namespace {

Matrix gaussian(Index rows, Index cols, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

void BM_SvtSoft(benchmark::State& state)
{
    const Matrix m = gaussian(200, state.range(0), 1);
    for (auto _ : state) benchmark::DoNotOptimize(svt_soft(m, 5.0));
}
BENCHMARK(BM_SvtSoft)->Arg(50)->Arg(100)->Arg(200);

void BM_SvtHard(benchmark::State& state)
{
    const Matrix m = gaussian(200, state.range(0), 2);
    for (auto _ : state) benchmark::DoNotOptimize(svt_hard(m, 4));
}
BENCHMARK(BM_SvtHard)->Arg(50)->Arg(100)->Arg(200);

void BM_TruncatedSvd(benchmark::State& state)
{
    const Matrix m = gaussian(200, state.range(0), 3);
    for (auto _ : state) benchmark::DoNotOptimize(truncated_svd(m, 4));
}
BENCHMARK(BM_TruncatedSvd)->Arg(50)->Arg(100)->Arg(200);

void BM_LassoCovariance(benchmark::State& state)
{
    const Index q = state.range(0);
    const Matrix x = gaussian(200, q, 4);
    const Matrix gram = x.transpose() * x / 200.0;
    const Vector xty = x.transpose() * gaussian(200, 1, 5).col(0) / 200.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(lasso_covariance_cd(gram, xty, 0.05, Vector::Zero(q)));
    }
}
BENCHMARK(BM_LassoCovariance)->Arg(100)->Arg(200);

} // namespace
