#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "cil/error.hpp"

namespace cil {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vectord = Vector<double>;
using Matrixd = Matrix<double>;

inline void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimMismatch,
                std::string(what) + " (" + std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFiniteInput, what);
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (std::abs(m(i, j) - m(j, i)) > tol) return false;
  return true;
}

// Copies the upper triangle onto the lower one.
template <typename Derived>
void mirror_upper(Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i) m(j, i) = m(i, j);
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Only the lower triangle of the input is read. Construction throws
/// NotPositiveDefinite when a pivot is non-positive, which for the moment
/// pipeline means the accumulated sums are corrupted or unregularized.
template <typename Scalar>
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix<Scalar>& m) {
    if (m.rows() != m.cols()) throw Error(ErrorCode::DimMismatch, "spd factor of non-square matrix");
    require_finite(m, "spd factor input");
    llt_.compute(m);
    if (llt_.info() != Eigen::Success) {
      throw Error(ErrorCode::NotPositiveDefinite, "non-positive pivot in Cholesky factorization");
    }
  }

  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }

  template <typename Rhs>
  Matrix<Scalar> solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    require_same_dim(rhs.rows(), dim(), "spd solve rhs");
    return llt_.solve(rhs);
  }

  // Smallest pivot, i.e. min_i L_ii^2.
  Scalar min_pivot() const {
    const auto diag = llt_.matrixLLT().diagonal();
    return diag.cwiseAbs2().minCoeff();
  }

 private:
  Eigen::LLT<Matrix<Scalar>, Eigen::Lower> llt_;
};

template <typename Scalar, typename Rhs>
Vector<Scalar> spd_solve(const Matrix<Scalar>& m, const Eigen::MatrixBase<Rhs>& rhs) {
  return SpdFactor<Scalar>(m).solve(rhs);
}

template <typename Scalar, typename Derived>
void outer_accumulate_inplace(Matrix<Scalar>& acc, const Eigen::MatrixBase<Derived>& v) {
  require_same_dim(acc.rows(), v.size(), "outer_accumulate");
  require_same_dim(acc.cols(), v.size(), "outer_accumulate");
  const Eigen::Index d = v.size();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Scalar vj = v(j);
    for (Eigen::Index i = 0; i <= j; ++i) acc(i, j) += v(i) * vj;
  }
  mirror_upper(acc);
}

/// Returns acc + v v^T with the lower triangle mirrored from the upper.
template <typename Scalar, typename Derived>
Matrix<Scalar> outer_accumulate(Matrix<Scalar> acc, const Eigen::MatrixBase<Derived>& v) {
  outer_accumulate_inplace(acc, v);
  return acc;
}

/// 1 - cos(u, v), clamped to [0, 2].
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine_distance(const Eigen::MatrixBase<DerivedU>& u,
                                          const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  require_same_dim(u.size(), v.size(), "cosine_distance");
  const Scalar nu2 = u.squaredNorm();
  const Scalar nv2 = v.squaredNorm();
  if (!(nu2 > 0) || !(nv2 > 0)) throw Error(ErrorCode::ZeroNorm, "cosine distance of zero vector");
  // sqrt(nu2 * nv2) keeps d(u, u) exactly zero.
  const Scalar cos = u.dot(v) / std::sqrt(nu2 * nv2);
  return std::clamp(Scalar(1) - cos, Scalar(0), Scalar(2));
}

}  // namespace cil
