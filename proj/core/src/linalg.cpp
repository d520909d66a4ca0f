#include "tweedie/linalg.hpp"

#include <cmath>
#include <string>

#include "tweedie/error.hpp"

namespace tweedie {

Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows) {
  if (rows <= 0 || v.size() % rows != 0) {
    throw Error(ErrorCode::InvalidArgument,
                "unvec: length " + std::to_string(v.size()) + " is not a multiple of " +
                    std::to_string(rows));
  }
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

Eigen::Index vech_size(Eigen::Index n) { return n * (n + 1) / 2; }

Eigen::Index matrix_dim_from_vech_size(Eigen::Index k) {
  Eigen::Index n = 0;
  while (vech_size(n) < k) ++n;
  if (vech_size(n) != k) {
    throw Error(ErrorCode::InvalidArgument,
                "length " + std::to_string(k) + " is not n(n+1)/2 for any n");
  }
  return n;
}

Vector vech(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) {
    throw Error(ErrorCode::NotSymmetric, "vech: matrix is not square");
  }
  const Eigen::Index n = a.rows();
  const double asym = n == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw Error(ErrorCode::NotSymmetric,
                "vech: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  }
  Vector out(vech_size(n));
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) out(k++) = a(i, j);
  }
  return out;
}

Matrix unvech(const Vector& v) {
  const Eigen::Index n = matrix_dim_from_vech_size(v.size());
  Matrix a(n, n);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      a(i, j) = v(k);
      a(j, i) = v(k);
      ++k;
    }
  }
  return a;
}

VechOperators vech_operators(Eigen::Index n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "vech_operators: n must be >= 1");
  const Eigen::Index m = vech_size(n);
  VechOperators ops{Matrix::Zero(n * n, m), Matrix::Zero(m, n * n)};
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      // vec index of (i, j) is i + n*j (column-major)
      ops.duplication(i + n * j, k) = 1.0;
      ops.duplication(j + n * i, k) = 1.0;
      ops.elimination(k, i + n * j) = 1.0;
      ++k;
    }
  }
  return ops;
}

Matrix kronecker(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace tweedie
