#include "cil/synthetic.hpp"

#include <Eigen/QR>

#include <cmath>
#include <random>

namespace cil {

void SyntheticSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (classes < 1) fail("classes must be positive");
  if (dim < 1) fail("dim must be positive");
  if (train_per_class < 1 || test_per_class < 1) fail("per-class counts must be positive");
  if (!(aspect_ratio >= 1.0) || !std::isfinite(aspect_ratio)) fail("aspect_ratio must be >= 1");
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) fail("noise_scale must be positive");
  if (!(mean_scale >= 0.0) || !std::isfinite(mean_scale)) fail("mean_scale must be >= 0");
  if (!(min_separation >= 0.0)) fail("min_separation must be >= 0");
  if (layout == MeanLayout::hidden_scale) {
    const auto informative = informative_dims == 0 ? dim / 2 : informative_dims;
    if (informative < 1 || informative > dim) fail("informative_dims must lie in [1, dim]");
    if (!(hidden_scale > 0.0) || !(nuisance_scale >= 0.0)) fail("hidden/nuisance scales must be positive");
  }
}

namespace {

Matrixd random_rotation(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrixd g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrixd> qr(g);
  Matrixd q = qr.householderQ();
  // Sign fix makes the draw uniform over orthogonal matrices.
  const Matrixd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

Matrixd draw_means(const SyntheticSpec& spec, Eigen::Index rows, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto k = static_cast<Eigen::Index>(spec.classes);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrixd means(rows, k);
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) means(i, j) = spec.mean_scale * normal(rng);
    bool ok = true;
    for (Eigen::Index a = 0; a < k && ok; ++a)
      for (Eigen::Index b = a + 1; b < k && ok; ++b)
        ok = (means.col(a) - means.col(b)).norm() >= spec.min_separation;
    if (ok) return means;
  }
  throw Error(ErrorCode::InvalidSpec, "could not place class means with the requested min_separation");
}

}  // namespace

SyntheticPair generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(spec.dim);

  // Noise model: x = mean + transform * z with z ~ N(0, I).
  Matrixd transform;
  Matrixd means;
  if (spec.layout == MeanLayout::spread) {
    Vectord stds(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double t = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
      stds(i) = spec.noise_scale *
                (spec.covariance == CovarianceShape::anisotropic ? std::pow(spec.aspect_ratio, t) : 1.0);
    }
    transform = stds.asDiagonal();
    if (spec.covariance == CovarianceShape::anisotropic) transform = random_rotation(d, rng) * transform;
    means = draw_means(spec, d, rng);
  } else {
    const Eigen::Index informative = spec.informative_dims == 0 ? d / 2 : spec.informative_dims;
    const Matrixd informative_means = draw_means(spec, informative, rng);
    means = Matrixd::Zero(d, spec.classes);
    means.topRows(informative) = spec.hidden_scale * informative_means;
    Vectord stds(d);
    stds.head(informative).setConstant(spec.hidden_scale * spec.noise_scale);
    stds.tail(d - informative).setConstant(spec.nuisance_scale);
    transform = stds.asDiagonal();
  }

  auto sample = [&](std::uint32_t per_class) {
    Dataset out;
    out.features.resize(d, static_cast<Eigen::Index>(spec.classes) * per_class);
    out.labels.reserve(static_cast<std::size_t>(spec.classes) * per_class);
    Vectord z(d);
    Eigen::Index col = 0;
    for (std::uint32_t k = 0; k < spec.classes; ++k) {
      for (std::uint32_t n = 0; n < per_class; ++n) {
        for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
        out.features.col(col++) = means.col(k) + transform * z;
        out.labels.push_back(k);
      }
    }
    return out;
  };
  SyntheticPair pair;
  pair.train = sample(spec.train_per_class);
  pair.test = sample(spec.test_per_class);
  return pair;
}

CovarianceShape parse_covariance_shape(const std::string& name) {
  if (name == "isotropic") return CovarianceShape::isotropic;
  if (name == "anisotropic") return CovarianceShape::anisotropic;
  throw Error(ErrorCode::InvalidSpec, "unknown covariance shape '" + name + "'");
}

MeanLayout parse_mean_layout(const std::string& name) {
  if (name == "spread") return MeanLayout::spread;
  if (name == "hidden_scale" || name == "hidden-scale") return MeanLayout::hidden_scale;
  throw Error(ErrorCode::InvalidSpec, "unknown mean layout '" + name + "'");
}

}  // namespace cil
