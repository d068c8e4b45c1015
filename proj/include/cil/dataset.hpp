#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cil/linalg.hpp"

namespace cil {

struct EmbeddingRecord {
  std::uint32_t label = 0;
  Vectord features;
};

/// In-memory labeled embeddings; column i of `features` belongs to `labels[i]`.
struct Dataset {
  Matrixd features;
  std::vector<std::uint32_t> labels;

  Dataset() = default;
  Dataset(Matrixd f, std::vector<std::uint32_t> l);

  static Dataset from_records(std::span<const EmbeddingRecord> records);

  Eigen::Index dim() const { return features.rows(); }
  Eigen::Index size() const { return features.cols(); }
  bool empty() const { return features.cols() == 0; }

  Dataset subset(std::span<const Eigen::Index> indices) const;
  // Sorted unique labels.
  std::vector<std::uint32_t> classes() const;
};

// Maps each label to its position in the sorted `classes` list.
std::vector<int> label_positions(std::span<const std::uint32_t> labels,
                                 std::span<const std::uint32_t> classes);

}  // namespace cil
