#include "cil/dataset.hpp"

#include <algorithm>

namespace cil {

Dataset::Dataset(Matrixd f, std::vector<std::uint32_t> l) : features(std::move(f)), labels(std::move(l)) {
  require_same_dim(features.cols(), static_cast<Eigen::Index>(labels.size()), "dataset labels vs columns");
}

Dataset Dataset::from_records(std::span<const EmbeddingRecord> records) {
  if (records.empty()) return {};
  const Eigen::Index d = records.front().features.size();
  Matrixd f(d, static_cast<Eigen::Index>(records.size()));
  std::vector<std::uint32_t> l;
  l.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    require_same_dim(records[i].features.size(), d, "record dimension");
    f.col(static_cast<Eigen::Index>(i)) = records[i].features;
    l.push_back(records[i].label);
  }
  return {std::move(f), std::move(l)};
}

Dataset Dataset::subset(std::span<const Eigen::Index> indices) const {
  Matrixd f(dim(), static_cast<Eigen::Index>(indices.size()));
  std::vector<std::uint32_t> l;
  l.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    f.col(static_cast<Eigen::Index>(i)) = features.col(indices[i]);
    l.push_back(labels[static_cast<std::size_t>(indices[i])]);
  }
  return {std::move(f), std::move(l)};
}

std::vector<std::uint32_t> Dataset::classes() const {
  std::vector<std::uint32_t> c(labels);
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

std::vector<int> label_positions(std::span<const std::uint32_t> labels,
                                 std::span<const std::uint32_t> classes) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto y : labels) {
    const auto it = std::lower_bound(classes.begin(), classes.end(), y);
    if (it == classes.end() || *it != y) {
      throw Error(ErrorCode::InvalidConfig, "label " + std::to_string(y) + " not in class list");
    }
    out.push_back(static_cast<int>(it - classes.begin()));
  }
  return out;
}

}  // namespace cil
