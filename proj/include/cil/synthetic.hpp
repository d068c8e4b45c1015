#pragma once

#include <cstdint>
#include <string>

#include "cil/dataset.hpp"

namespace cil {

enum class CovarianceShape { isotropic, anisotropic };

// spread: class means ~ N(0, mean_scale^2 I) in every dimension.
// hidden_scale: the first `informative_dims` carry the class signal but are
// multiplied by `hidden_scale`; the remaining dims are class-independent
// noise with std `nuisance_scale`.
enum class MeanLayout { spread, hidden_scale };

struct SyntheticSpec {
  std::uint32_t classes = 10;
  std::uint32_t dim = 16;
  std::uint32_t train_per_class = 200;
  std::uint32_t test_per_class = 100;
  CovarianceShape covariance = CovarianceShape::isotropic;
  double aspect_ratio = 1.0;  // largest / smallest per-axis std for anisotropic
  double noise_scale = 1.0;   // smallest per-axis std
  MeanLayout layout = MeanLayout::spread;
  double mean_scale = 3.0;
  double min_separation = 0.0;  // minimum pairwise distance between class means
  double hidden_scale = 0.2;
  std::uint32_t informative_dims = 0;  // 0 means dim / 2
  double nuisance_scale = 3.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticPair {
  Dataset train;
  Dataset test;
};

/// Gaussian class clusters with a shared covariance; deterministic per seed.
/// Samples are grouped by class, classes in ascending id order.
SyntheticPair generate_synthetic(const SyntheticSpec& spec);

CovarianceShape parse_covariance_shape(const std::string& name);
MeanLayout parse_mean_layout(const std::string& name);

}  // namespace cil
