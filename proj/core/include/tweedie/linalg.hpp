#pragma once

#include <Eigen/Dense>
#include <functional>

namespace tweedie {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorFn = std::function<Vector(const Vector&)>;

/// Column-stacking vectorization: the columns of `a` laid end to end.
Vector vec(const Matrix& a);

/// Inverse of vec for an `rows`-row matrix.
Matrix unvec(const Vector& v, Eigen::Index rows);

/// Half-vectorization: column-stacks the lower triangle (diagonal included).
/// Throws NotSymmetric if `a` is not symmetric within `tol` (max-abs).
Vector vech(const Matrix& a, double tol = 1e-10);

/// Rebuilds the symmetric n x n matrix whose half-vectorization is `v`.
Matrix unvech(const Vector& v);

/// n(n+1)/2.
Eigen::Index vech_size(Eigen::Index n);

/// Inverse of vech_size; throws InvalidArgument when `k` is not triangular.
Eigen::Index matrix_dim_from_vech_size(Eigen::Index k);

struct VechOperators {
  Matrix duplication;  // D_n, n^2 x n(n+1)/2: D_n vech(A) = vec(A)
  Matrix elimination;  // L_n, n(n+1)/2 x n^2: L_n vec(A) = vech(A)
};

VechOperators vech_operators(Eigen::Index n);

Matrix kronecker(const Matrix& a, const Matrix& b);

}  // namespace tweedie
