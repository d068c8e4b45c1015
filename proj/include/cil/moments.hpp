#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "cil/linalg.hpp"

namespace cil {

/// Running sums (A = sum g g^T, b = sum g, count) over every embedding seen so
/// far. Carries no labels; this is the only cross-session covariance state.
template <typename Scalar>
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index dim)
      : a_(Matrix<Scalar>::Zero(dim, dim)), b_(Vector<Scalar>::Zero(dim)) {
    if (dim <= 0) throw Error(ErrorCode::InvalidConfig, "moments dimension must be positive");
  }

  // Rebuilds from persisted sums; rejects states that break the invariants.
  static RunningMoments from_parts(Matrix<Scalar> a, Vector<Scalar> b, std::uint64_t count) {
    require_same_dim(a.rows(), b.size(), "moments a/b");
    require_same_dim(a.cols(), b.size(), "moments a/b");
    require_finite(a, "moments a");
    require_finite(b, "moments b");
    if (!is_symmetric(a, Scalar(1e-9))) throw Error(ErrorCode::InvalidConfig, "moments a is not symmetric");
    if (count == 0 && (!a.isZero(0) || !b.isZero(0))) {
      throw Error(ErrorCode::InvalidConfig, "zero-count moments with non-zero sums");
    }
    RunningMoments m(b.size());
    m.a_ = std::move(a);
    m.b_ = std::move(b);
    m.count_ = count;
    return m;
  }

  Eigen::Index dim() const { return b_.size(); }
  std::uint64_t count() const { return count_; }
  const Matrix<Scalar>& a() const { return a_; }
  const Vector<Scalar>& b() const { return b_; }

  template <typename Derived>
  void accumulate(const Eigen::MatrixBase<Derived>& v) {
    require_same_dim(v.size(), dim(), "moments update");
    require_finite(v, "moments update vector");
    outer_accumulate_inplace(a_, v);
    b_ += v;
    ++count_;
  }

  // Each column of `columns` is one embedding. Validates everything before mutating.
  template <typename Derived>
  void accumulate_columns(const Eigen::MatrixBase<Derived>& columns) {
    require_same_dim(columns.rows(), dim(), "moments update");
    require_finite(columns, "moments update batch");
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
      outer_accumulate_inplace(a_, columns.col(c));
      b_ += columns.col(c);
    }
    count_ += static_cast<std::uint64_t>(columns.cols());
  }

  void merge(const RunningMoments& other) {
    require_same_dim(other.dim(), dim(), "moments merge");
    a_ += other.a_;
    b_ += other.b_;
    count_ += other.count_;
  }

  friend bool operator==(const RunningMoments& x, const RunningMoments& y) {
    return x.count_ == y.count_ && x.a_ == y.a_ && x.b_ == y.b_;
  }

 private:
  Matrix<Scalar> a_;
  Vector<Scalar> b_;
  std::uint64_t count_ = 0;
};

using RunningMomentsd = RunningMoments<double>;

template <typename Scalar>
struct CovarianceEstimate {
  Matrix<Scalar> s;      // sample covariance
  Matrix<Scalar> s_reg;  // s + regularizer * I
  Vector<Scalar> mean;
  std::uint64_t n = 0;
};

using CovarianceEstimated = CovarianceEstimate<double>;

template <typename Scalar>
RunningMoments<Scalar> inc_update(RunningMoments<Scalar> m, std::span<const Vector<Scalar>> batch) {
  for (const auto& v : batch) {
    require_same_dim(v.size(), m.dim(), "moments update");
    require_finite(v, "moments update vector");
  }
  for (const auto& v : batch) m.accumulate(v);
  return m;
}

template <typename Scalar, typename Derived>
RunningMoments<Scalar> inc_update(RunningMoments<Scalar> m, const Eigen::MatrixBase<Derived>& columns) {
  m.accumulate_columns(columns);
  return m;
}

template <typename Scalar>
RunningMoments<Scalar> merge(RunningMoments<Scalar> m1, const RunningMoments<Scalar>& m2) {
  m1.merge(m2);
  return m1;
}

/// S = (A - b b^T / count) / (count - 1), mean = b / count, S_reg = S + regularizer * I.
template <typename Scalar>
CovarianceEstimate<Scalar> finalize(const RunningMoments<Scalar>& m, Scalar regularizer = Scalar(1)) {
  if (m.count() < 2) {
    throw Error(ErrorCode::InsufficientData,
                "covariance needs at least 2 samples, have " + std::to_string(m.count()));
  }
  if (!(regularizer > 0) || !std::isfinite(regularizer)) {
    throw Error(ErrorCode::InvalidConfig, "regularizer must be positive and finite");
  }
  const auto n = static_cast<Scalar>(m.count());
  const Eigen::Index d = m.dim();
  CovarianceEstimate<Scalar> est;
  est.n = m.count();
  est.mean = m.b() / n;
  est.s.resize(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      est.s(i, j) = (m.a()(i, j) - m.b()(i) * m.b()(j) / n) / (n - 1);
  mirror_upper(est.s);
  est.s_reg = est.s;
  est.s_reg.diagonal().array() += regularizer;
  return est;
}

// MOM1 checkpoint: magic, dim u32, count u64, b, upper triangle of A (row-major), all little-endian.
void write_moments(std::ostream& out, const RunningMomentsd& m);
RunningMomentsd read_moments(std::istream& in);
void save_moments(const std::filesystem::path& path, const RunningMomentsd& m);
RunningMomentsd load_moments(const std::filesystem::path& path);

}  // namespace cil
