#include "lagfactor/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "lagfactor/error.hpp"

namespace lagfactor {

namespace {

void normalize_signs(Svd& out)
{
    for (Index k = 0; k < out.u.cols(); ++k) {
        for (Index i = 0; i < out.u.rows(); ++i) {
            const double e = out.u(i, k);
            if (e != 0.0) {
                if (e < 0.0) {
                    out.u.col(k) *= -1.0;
                    out.v.col(k) *= -1.0;
                }
                break;
            }
        }
    }
}

} // namespace

Svd thin_svd(const Matrix& m)
{
    if (!m.allFinite()) throw NumericError("SVD of a matrix with non-finite entries");
    Svd out;
    if (m.size() == 0) {
        out.u = Matrix(m.rows(), 0);
        out.v = Matrix(m.cols(), 0);
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    out.v = svd.matrixV();
    normalize_signs(out);
    return out;
}

Svd truncated_svd(const Matrix& m, int r)
{
    const Index k = std::min(m.rows(), m.cols());
    if (r < 1 || r > k) {
        throw ValidationError("truncated_svd: rank " + std::to_string(r) + " outside [1, " + std::to_string(k) + "]");
    }
    if (!m.allFinite()) throw NumericError("SVD of a matrix with non-finite entries");
    if (2 * r > k) {
        Svd full = thin_svd(m);
        full.u.conservativeResize(Eigen::NoChange, r);
        full.v.conservativeResize(Eigen::NoChange, r);
        full.s.conservativeResize(r);
        return full;
    }

    // Basis for the leading right (or left) singular subspace.
    const bool wide = m.cols() > m.rows();
    Matrix gram = wide ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("eigen-decomposition did not converge");
    const Matrix basis = eig.eigenvectors().rightCols(r).rowwise().reverse();

    // Rayleigh-Ritz: orthonormal Q spanning m * basis, then SVD of Q^T m.
    const Matrix y = wide ? Matrix(m.transpose() * basis) : Matrix(m * basis);
    const Matrix q = Eigen::HouseholderQR<Matrix>(y).householderQ() * Matrix::Identity(y.rows(), r);
    const Matrix small = wide ? Matrix(m * q) : Matrix(q.transpose() * m); // r-column or r-row block
    Eigen::JacobiSVD<Matrix> svd(small, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Svd out;
    out.s = svd.singularValues();
    if (wide) {
        out.u = svd.matrixU();
        out.v = q * svd.matrixV();
    } else {
        out.u = q * svd.matrixU();
        out.v = svd.matrixV();
    }
    normalize_signs(out);
    return out;
}

int numerical_rank(const Vector& singular_values, double rel_tol)
{
    if (singular_values.size() == 0 || singular_values(0) <= 0.0) return 0;
    const double cut = rel_tol * singular_values(0);
    int r = 0;
    for (Index i = 0; i < singular_values.size(); ++i) {
        if (singular_values(i) > cut) ++r;
    }
    return r;
}

double nuclear_norm(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues().sum();
}

double operator_norm(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

Matrix column_space_basis(const Matrix& m, double rel_tol)
{
    const Svd svd = thin_svd(m);
    const int r = numerical_rank(svd.s, rel_tol);
    return svd.u.leftCols(r);
}

double spd_condition_number(const Matrix& m)
{
    if (m.size() == 0) return std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace lagfactor
