#include "lagfactor/forecast.hpp"

#include <Eigen/Cholesky>

#include "lagfactor/error.hpp"
#include "lagfactor/linalg.hpp"

namespace lagfactor {

Matrix filtered_process(const TimeSeriesPanel& panel, const Matrix& b_hat, int lags)
{
    const LagDesign design = build_lag_design(panel, lags);
    if (b_hat.rows() != panel.cols() || b_hat.cols() != design.predictors.cols()) {
        throw DimensionError("filtered_process: B must be " + std::to_string(panel.cols()) + "x" +
                             std::to_string(design.predictors.cols()));
    }
    return design.response - design.predictors * b_hat.transpose();
}

Matrix sample_cross_cov(const Matrix& z, int h)
{
    const Index n = z.rows();
    if (h < 0 || h >= n) {
        throw DimensionError("sample_cross_cov: lag " + std::to_string(h) + " needs h < " + std::to_string(n));
    }
    const Index m = n - h;
    return z.bottomRows(m).transpose() * z.topRows(m) / static_cast<double>(m);
}

ForecastResult forecast_h(const TimeSeriesPanel& panel, const ModelFit& fit, int horizon)
{
    if (horizon < 1) throw ValidationError("forecast horizon must be >= 1");
    if (fit.rank < 1) throw ValidationError("forecast needs a fit with rank >= 1");
    const Index p = panel.cols();
    const int d = fit.lags;
    if (fit.right_basis.rows() != p || fit.right_basis.cols() != fit.rank) {
        throw DimensionError("right_basis must be p x rank");
    }

    const Matrix z = filtered_process(panel, fit.b_hat, d);
    if (horizon >= z.rows()) {
        throw DimensionError("horizon " + std::to_string(horizon) + " exceeds the filtered sample length");
    }
    const Matrix& v = fit.right_basis;

    ForecastResult out;
    out.horizon = horizon;
    Matrix gram = v.transpose() * sample_cross_cov(z, 0) * v;
    if (spd_condition_number(gram) > 1e12) {
        const double trace = gram.trace();
        if (!(trace > 0.0)) {
            throw NumericError("V^T Gamma_Z(0) V Gram matrix is singular (zero trace)");
        }
        gram.diagonal().array() += 1e-10 * trace / static_cast<double>(fit.rank);
        out.gram_regularized = true;
    }
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success) throw NumericError("V^T Gamma_Z(0) V Gram matrix factorization failed");
    const Vector anchor = v.transpose() * z.row(z.rows() - 1).transpose();
    const Vector weights = ldlt.solve(anchor);
    if (!weights.allFinite()) throw NumericError("V^T Gamma_Z(0) V Gram matrix is singular");

    // History x_{T}, x_{T-1}, ... followed by forecasts, newest last.
    const Matrix& x = panel.values();
    Matrix path(d + horizon, p);
    path.topRows(d) = x.bottomRows(d);

    out.z_hat.resize(horizon, p);
    out.x_hat.resize(horizon, p);
    for (int i = 1; i <= horizon; ++i) {
        const Vector zf = sample_cross_cov(z, i) * v * weights;
        Vector xf = zf;
        for (int k = 1; k <= d; ++k) {
            xf.noalias() += fit.b_hat.middleCols((k - 1) * p, p) * path.row(d + i - 1 - k).transpose();
        }
        path.row(d + i - 1) = xf.transpose();
        out.z_hat.row(i - 1) = zf.transpose();
        out.x_hat.row(i - 1) = xf.transpose();
    }
    if (!out.x_hat.allFinite()) throw NumericError("forecast produced non-finite values");
    return out;
}

} // namespace lagfactor
