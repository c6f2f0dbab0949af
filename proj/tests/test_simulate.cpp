#include <gtest/gtest.h>

#include <cmath>

#include "lagfactor/error.hpp"
#include "lagfactor/simulate.hpp"
#include "oracles.hpp"

using namespace lagfactor;

namespace {

double autocorr(const Vector& x, int lag)
{
    const double mean = x.mean();
    double num = 0.0;
    double den = 0.0;
    for (Index t = 0; t < x.size(); ++t) {
        den += (x(t) - mean) * (x(t) - mean);
        if (t >= lag) num += (x(t) - mean) * (x(t - lag) - mean);
    }
    return num / den;
}

Index jacobi_rank(const Matrix& m)
{
    const Vector s = oracle::jacobi_svd(m).s;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i) r += s(i) > 1e-9 * s(0) ? 1 : 0;
    return r;
}

} // namespace

TEST(SparseB, RadiusAndRowSupport)
{
    Rng rng(1);
    const SparseDraw draw = gen_sparse_b(50, 0.04, SparsityKind::Exact, 0.5, 0.7, rng);
    Eigen::EigenSolver<Matrix> es(draw.b);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 0.7, 1e-6);
    for (Index i = 0; i < 50; ++i) EXPECT_EQ((draw.b.row(i).array() != 0.0).count(), 2);
    EXPECT_EQ(draw.weak_mask.cwiseAbs().sum(), 0.0);
}

TEST(SparseB, WeakFillsComplement)
{
    Rng rng(2);
    const SparseDraw draw = gen_sparse_b(20, 0.1, SparsityKind::Weak, 0.5, 0.7, rng);
    for (Index i = 0; i < 20; ++i) {
        EXPECT_EQ(static_cast<int>(draw.weak_mask.row(i).sum()), 18);
        double strong_min = INFINITY;
        double weak_max = 0.0;
        for (Index j = 0; j < 20; ++j) {
            if (draw.weak_mask(i, j) != 0.0) {
                weak_max = std::max(weak_max, std::abs(draw.b(i, j)));
            } else {
                strong_min = std::min(strong_min, std::abs(draw.b(i, j)));
            }
        }
        // Same scale factor on both, so magnitudes stay ordered.
        EXPECT_GT(strong_min, weak_max);
    }
}

TEST(SparseVar, CompanionRadius)
{
    Rng rng(3);
    const SparseDraw draw = gen_sparse_var(30, 2, 0.1, SparsityKind::Exact, 0.5, 0.7, rng);
    ASSERT_EQ(draw.b.cols(), 60);
    Matrix comp = Matrix::Zero(60, 60);
    comp.topRows(30) = draw.b;
    comp.block(30, 0, 30, 30) = Matrix::Identity(30, 30);
    Eigen::EigenSolver<Matrix> es(comp);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 0.7, 1e-6);
    for (Index i = 0; i < 30; ++i) {
        EXPECT_EQ((draw.b.row(i).head(30).array() != 0.0).count(), 3);
        EXPECT_EQ((draw.b.row(i).tail(30).array() != 0.0).count(), 3);
    }
}

TEST(SparseB, RejectsBadArguments)
{
    Rng rng(4);
    EXPECT_THROW(gen_sparse_b(10, 0.1, SparsityKind::Exact, 0.05, 0.7, rng), ValidationError);
    EXPECT_THROW(gen_sparse_b(10, 0.1, SparsityKind::Exact, 0.5, 1.0, rng), ValidationError);
    EXPECT_THROW(gen_sparse_b(10, 0.0, SparsityKind::Exact, 0.5, 0.7, rng), ValidationError);
}

TEST(FactorPath, Ar1Autocorrelation)
{
    Rng rng(5);
    const Matrix f = gen_factor_path(1, 1, 40000, 0.7, 0.7, 1.0, rng);
    // The scalar coefficient is +-0.7 (sign from the uniform draw).
    EXPECT_NEAR(std::abs(autocorr(f.col(0), 1)), 0.7, 0.02);
    EXPECT_NEAR(autocorr(f.col(0), 2), 0.49, 0.03);
    // Stationary variance 1 / (1 - 0.49).
    EXPECT_NEAR(f.col(0).squaredNorm() / 40000.0, 1.0 / 0.51, 0.1);
}

TEST(FactorPath, ZeroShockVarianceGivesZeroPath)
{
    Rng rng(6);
    EXPECT_EQ(gen_factor_path(3, 2, 50, 0.6, 0.8, 0.0, rng).cwiseAbs().maxCoeff(), 0.0);
}

TEST(FactorVar, RadiusHit)
{
    Rng rng(7);
    const Matrix phi = gen_factor_var(3, 2, 0.75, rng);
    Matrix comp = Matrix::Zero(6, 6);
    comp.topRows(3) = phi;
    comp.block(3, 0, 3, 3) = Matrix::Identity(3, 3);
    Eigen::EigenSolver<Matrix> es(comp);
    EXPECT_NEAR(es.eigenvalues().cwiseAbs().maxCoeff(), 0.75, 1e-9);
}

TEST(Noise, ToeplitzCorrelation)
{
    Rng rng(8);
    const NoiseSpec spec{SigmaStructure::Toeplitz, 0.5, NoiseLaw::Gaussian, 0.0};
    const Matrix e = gen_noise(40000, 4, spec, rng);
    const Matrix cov = e.transpose() * e / 40000.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) EXPECT_NEAR(cov(i, j), std::pow(0.5, std::abs(i - j)), 0.03);
    }
}

TEST(Noise, StudentTRescaledToUnitCovariance)
{
    Rng rng(9);
    const NoiseSpec spec{SigmaStructure::Diagonal, 0.0, NoiseLaw::StudentT, 8.0};
    const Matrix e = gen_noise(100000, 3, spec, rng);
    const Matrix cov = e.transpose() * e / 100000.0;
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(cov(i, i), 1.0, 0.05);
        for (int j = 0; j < i; ++j) EXPECT_NEAR(cov(i, j), 0.0, 0.03);
    }
    // Heavier tails than Gaussian: excess kurtosis of t_8 is 6 / (8 - 4) = 1.5.
    const double m4 = e.col(0).array().pow(4).mean();
    EXPECT_GT(m4 / (cov(0, 0) * cov(0, 0)), 3.5);
}

TEST(Simulate, DeterministicInSeed)
{
    SimulationSetting s = setting_by_name("S0");
    s.p = 30;
    s.row_density = 2.0 / 30.0;
    const SimulatedData a = simulate(s);
    const SimulatedData b = simulate(s);
    EXPECT_EQ(a.panel.values(), b.panel.values());
    EXPECT_EQ(a.truth.b_true, b.truth.b_true);
    EXPECT_EQ(a.truth.oracle_next, b.truth.oracle_next);
    s.seed = 2;
    EXPECT_NE(simulate(s).panel.values(), a.panel.values());
}

TEST(Simulate, LagAdjustedTruthConsistent)
{
    for (const char* name : {"S0", "D2"}) {
        const SimulationSetting s = setting_by_name(name);
        const SimulatedData data = simulate(s);
        const GroundTruth& g = data.truth;
        const int d = s.lags;
        ASSERT_EQ(data.panel.rows(), s.T + 1);
        ASSERT_EQ(g.b_true.cols(), d * s.p);
        ASSERT_EQ(g.theta_true.rows(), s.T + 1 - d);
        const Matrix implied = g.stacked_factors * g.lambda_true.transpose();
        EXPECT_LE((implied - g.theta_true).cwiseAbs().maxCoeff(), 1e-10 * g.theta_true.cwiseAbs().maxCoeff());
        EXPECT_EQ(jacobi_rank(g.theta_true), (d + 1) * s.K);
        EXPECT_NEAR(g.realized_strength / s.strength_ratio, 1.0, 0.15);
        for (Index i = 0; i < s.p; ++i) {
            for (int k = 0; k < d; ++k) {
                EXPECT_EQ((g.b_true.row(i).segment(k * s.p, s.p).array() != 0.0).count(), 2);
            }
        }
    }
}

TEST(Simulate, ResponseMinusLagAndThetaIsWhite)
{
    // X_T - X_{T-1} B^T - Theta = epsilon, i.i.d. with unit variance.
    const SimulationSetting s = setting_by_name("S0");
    const SimulatedData data = simulate(s);
    const LagDesign d = build_lag_design(data.panel, 1);
    const Matrix e = d.response - d.predictors * data.truth.b_true.transpose() - data.truth.theta_true;
    EXPECT_NEAR(e.squaredNorm() / static_cast<double>(e.size()), 1.0, 0.03);
    double lag1 = 0.0;
    for (Index t = 1; t < e.rows(); ++t) lag1 += e.row(t).dot(e.row(t - 1));
    EXPECT_NEAR(lag1 / e.squaredNorm(), 0.0, 0.03);
}

TEST(Simulate, StateSpaceShape)
{
    const SimulationSetting s = setting_by_name("F1");
    const SimulatedData data = simulate(s);
    const GroundTruth& g = data.truth;
    EXPECT_EQ(g.lambda_true.cols(), 4);
    EXPECT_EQ(g.b_true.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(jacobi_rank(g.theta_true), 4);
    // dim_u = 2 shocks drive a 4-dimensional state.
    EXPECT_EQ(jacobi_rank(g.factor_path.bottomRows(199) - g.factor_path.middleRows(1, 199) *
                                                              (g.factor_path.middleRows(1, 199).fullPivHouseholderQr().solve(
                                                                  g.factor_path.bottomRows(199)))),
              2);
    const LagDesign d = build_lag_design(data.panel, 1);
    EXPECT_NEAR((d.response - g.theta_true).squaredNorm() / static_cast<double>(g.theta_true.size()), 1.0, 0.05);
}

TEST(Settings, PresetsValidateAndUnknownRejected)
{
    for (const std::string& n : setting_names()) EXPECT_NO_THROW(setting_by_name(n).validate()) << n;
    EXPECT_THROW(setting_by_name("S9"), ValidationError);
    SimulationSetting s = setting_by_name("S0");
    s.row_density = 0.001;
    EXPECT_THROW(s.validate(), ValidationError);
}
