#pragma once

// Textbook reference computations for tests: two-pass statistics, explicit
// inverse, central differences.

#include <Eigen/LU>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "cil/dataset.hpp"

namespace cil::oracle {

inline Matrixd two_pass_covariance(const Matrixd& x) {
  const Eigen::Index d = x.rows(), n = x.cols();
  Vectord mean = Vectord::Zero(d);
  for (Eigen::Index j = 0; j < n; ++j) mean += x.col(j);
  mean /= static_cast<double>(n);
  Matrixd s = Matrixd::Zero(d, d);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vectord c = x.col(j) - mean;
    s += c * c.transpose();
  }
  return s / static_cast<double>(n - 1);
}

struct BatchHead {
  std::vector<std::uint32_t> class_ids;
  Matrixd weights;
  Vectord biases;
};

// LDA on pooled data via an explicit inverse; identity_cov gives NCM.
inline BatchHead batch_lda(const Dataset& data, double regularizer = 1.0, bool identity_cov = false) {
  const Eigen::Index d = data.dim();
  std::map<std::uint32_t, std::pair<Vectord, double>> per_class;
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    auto& [sum, n] = per_class.try_emplace(data.labels[static_cast<std::size_t>(j)], Vectord::Zero(d), 0.0).first->second;
    sum += data.features.col(j);
    n += 1.0;
  }
  Matrixd s_reg = Matrixd::Identity(d, d);
  if (!identity_cov) s_reg = two_pass_covariance(data.features) + regularizer * Matrixd::Identity(d, d);
  const Matrixd inv = s_reg.fullPivLu().inverse();
  BatchHead head;
  head.weights.resize(d, static_cast<Eigen::Index>(per_class.size()));
  head.biases.resize(static_cast<Eigen::Index>(per_class.size()));
  Eigen::Index k = 0;
  for (const auto& [id, entry] : per_class) {
    const Vectord mu = entry.first / entry.second;
    head.class_ids.push_back(id);
    head.weights.col(k) = inv * mu;
    head.biases(k) = std::log(entry.second / static_cast<double>(data.size())) - 0.5 * mu.dot(inv * mu);
    ++k;
  }
  return head;
}

// Central differences of f over every entry of `params`.
template <typename P>
Eigen::VectorXd central_difference(P& params, const std::function<double()>& f, double eps = 1e-4) {
  Eigen::VectorXd g(params.size());
  auto flat = params.reshaped();
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double orig = flat(i);
    flat(i) = orig + eps;
    const double up = f();
    flat(i) = orig - eps;
    const double down = f();
    flat(i) = orig;
    g(i) = (up - down) / (2 * eps);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-300});
  return (a - b).norm() / scale;
}

inline Matrixd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrixd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

inline Matrixd random_spd(Eigen::Index d, std::mt19937_64& rng) {
  const Matrixd g = gaussian_matrix(d, d, rng);
  return g * g.transpose() + static_cast<double>(d) * 0.1 * Matrixd::Identity(d, d);
}

}  // namespace cil::oracle
