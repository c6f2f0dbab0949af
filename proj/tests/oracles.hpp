#pragma once

// Slow, independent reference computations used only by the tests. Nothing
// here calls into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) m(i, j) = n(rng);
    }
    return m;
}

// One-sided Jacobi SVD (Eigen's, a different algorithm from the library's).
struct FullSvd {
    Matrix u;
    Vector s;
    Matrix v;
};

inline FullSvd jacobi_svd(const Matrix& m)
{
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

inline Matrix shrink_oracle(const Matrix& m, double tau)
{
    FullSvd f = jacobi_svd(m);
    for (Index i = 0; i < f.s.size(); ++i) f.s(i) = std::max(f.s(i) - tau, 0.0);
    return f.u * f.s.asDiagonal() * f.v.transpose();
}

inline Matrix truncate_oracle(const Matrix& m, int r)
{
    FullSvd f = jacobi_svd(m);
    for (Index i = r; i < f.s.size(); ++i) f.s(i) = 0.0;
    return f.u * f.s.asDiagonal() * f.v.transpose();
}

inline double nuclear(const Matrix& m)
{
    return jacobi_svd(m).s.sum();
}

// (1/2n)||y - X b||^2 + lambda ||b||_1
inline double lasso_objective(const Matrix& x, const Vector& y, double lambda, const Vector& b)
{
    const double n = static_cast<double>(x.rows());
    return (y - x * b).squaredNorm() / (2.0 * n) + lambda * b.lpNorm<1>();
}

// Enumerates every sign pattern in {-1, 0, +1}^q; on each pattern solves the
// restricted stationarity equations exactly and keeps sign-consistent
// solutions. Returns the best one. Only sensible for q <= 5 or so.
inline Vector brute_force_lasso(const Matrix& x, const Vector& y, double lambda)
{
    const Index q = x.cols();
    const double n = static_cast<double>(x.rows());
    Vector best = Vector::Zero(q);
    double best_obj = lasso_objective(x, y, lambda, best);
    std::vector<int> signs(static_cast<std::size_t>(q), -1);
    long total = 1;
    for (Index k = 0; k < q; ++k) total *= 3;
    for (long code = 0; code < total; ++code) {
        long c = code;
        std::vector<Index> active;
        for (Index k = 0; k < q; ++k) {
            signs[static_cast<std::size_t>(k)] = static_cast<int>(c % 3) - 1;
            c /= 3;
            if (signs[static_cast<std::size_t>(k)] != 0) active.push_back(k);
        }
        if (active.empty()) continue;
        const Index a = static_cast<Index>(active.size());
        Matrix xa(x.rows(), a);
        Vector s(a);
        for (Index i = 0; i < a; ++i) {
            xa.col(i) = x.col(active[static_cast<std::size_t>(i)]);
            s(i) = signs[static_cast<std::size_t>(active[static_cast<std::size_t>(i)])];
        }
        const Matrix g = xa.transpose() * xa / n;
        const Vector rhs = xa.transpose() * y / n - lambda * s;
        const Vector ba = g.fullPivLu().solve(rhs);
        bool consistent = true;
        for (Index i = 0; i < a; ++i) consistent = consistent && ba(i) * s(i) > 0.0;
        if (!consistent) continue;
        Vector b = Vector::Zero(q);
        for (Index i = 0; i < a; ++i) b(active[static_cast<std::size_t>(i)]) = ba(i);
        const double obj = lasso_objective(x, y, lambda, b);
        if (obj < best_obj) {
            best_obj = obj;
            best = b;
        }
    }
    return best;
}

inline Vector least_squares(const Matrix& x, const Vector& y)
{
    const Matrix g = x.transpose() * x;
    return g.llt().solve(x.transpose() * y);
}

// (1/(n-h)) sum_{t >= h} z_t z_{t-h}^T, by explicit loops.
inline Matrix cross_cov_loop(const Matrix& z, int h)
{
    const Index n = z.rows();
    const Index p = z.cols();
    Matrix out = Matrix::Zero(p, p);
    for (Index t = h; t < n; ++t) {
        for (Index i = 0; i < p; ++i) {
            for (Index j = 0; j < p; ++j) out(i, j) += z(t, i) * z(t - h, j);
        }
    }
    return out / static_cast<double>(n - h);
}

// Static-factor projection forecast for a panel with no lag term:
// z_t = x_t over the design rows, prediction Gamma(h) V (V^T Gamma(0) V)^{-1} V^T x_T.
inline Matrix static_factor_forecast(const Matrix& x, int lags, const Matrix& v, int horizon)
{
    const Matrix z = x.bottomRows(x.rows() - lags);
    const Matrix g0 = cross_cov_loop(z, 0);
    const Matrix inner = v.transpose() * g0 * v;
    const Vector anchor = v.transpose() * z.row(z.rows() - 1).transpose();
    const Vector w = inner.inverse() * anchor;
    Matrix out(horizon, x.cols());
    for (int i = 1; i <= horizon; ++i) out.row(i - 1) = (cross_cov_loop(z, i) * v * w).transpose();
    return out;
}

// det(z^2 I - z B1 - B2) for 2x2 blocks.
inline std::complex<double> quadratic_det(const Matrix& b1, const Matrix& b2, std::complex<double> z)
{
    using C = std::complex<double>;
    C m[2][2];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m[i][j] = (i == j ? z * z : C(0.0)) - z * b1(i, j) - b2(i, j);
    }
    return m[0][0] * m[1][1] - m[0][1] * m[1][0];
}

// Orthonormal basis of span(m) by modified Gram-Schmidt, dropping columns whose
// residual norm is below tol relative to the largest column.
inline Matrix gram_schmidt(const Matrix& m, double tol = 1e-10)
{
    double scale = 0.0;
    for (Index j = 0; j < m.cols(); ++j) scale = std::max(scale, m.col(j).norm());
    std::vector<Vector> basis;
    for (Index j = 0; j < m.cols(); ++j) {
        Vector c = m.col(j);
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vector& b : basis) c -= b.dot(c) * b;
        }
        const double nrm = c.norm();
        if (nrm > tol * scale) basis.push_back(c / nrm);
    }
    Matrix q(m.rows(), static_cast<Index>(basis.size()));
    for (Index j = 0; j < q.cols(); ++j) q.col(j) = basis[static_cast<std::size_t>(j)];
    return q;
}

inline Matrix random_orthonormal(Index n, Index k, std::mt19937_64& rng)
{
    return gram_schmidt(random_matrix(n, k, rng));
}

} // namespace oracle
