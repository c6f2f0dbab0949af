#pragma once

#include "lagfactor/core.hpp"

namespace lagfactor {

/// Thin SVD m = U diag(s) V^T with s nonincreasing. Signs are normalized so
/// the first nonzero entry of each column of U is nonnegative.
struct Svd {
    Matrix u;
    Vector s;
    Matrix v;
};

Svd thin_svd(const Matrix& m);

/// Leading r singular triplets only, from the eigensystem of the smaller
/// Gram matrix followed by a Rayleigh-Ritz refinement on the column space.
/// Same sign convention as thin_svd. Much cheaper than thin_svd when r is
/// small; accuracy degrades only when s(r-1) and s(r) nearly coincide, where
/// the truncation itself is ill-conditioned.
Svd truncated_svd(const Matrix& m, int r);

/// Number of singular values strictly above rel_tol * s(0).
int numerical_rank(const Vector& singular_values, double rel_tol = 1e-8);

double nuclear_norm(const Matrix& m);
double operator_norm(const Matrix& m);

/// Orthonormal basis of the column space of m, truncated at numerical rank.
Matrix column_space_basis(const Matrix& m, double rel_tol = 1e-8);

/// Condition number of a symmetric positive semidefinite matrix
/// (ratio of extreme eigenvalues; infinity when the smallest is not positive).
double spd_condition_number(const Matrix& m);

} // namespace lagfactor
