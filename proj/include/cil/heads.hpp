#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/moments.hpp"
#include "cil/training.hpp"

namespace cil {

struct ClassTally {
  Vectord sum;
  std::uint64_t n = 0;

  friend bool operator==(const ClassTally&, const ClassTally&) = default;
};

/// Running per-class embedding sums and counts. Class ids only ever get added.
class ClassStats {
 public:
  explicit ClassStats(Eigen::Index dim);

  Eigen::Index dim() const { return dim_; }
  std::uint64_t total_n() const { return total_n_; }
  std::size_t num_classes() const { return tallies_.size(); }
  const std::map<std::uint32_t, ClassTally>& tallies() const { return tallies_; }
  std::vector<std::uint32_t> class_ids() const;
  bool contains(std::uint32_t id) const { return tallies_.contains(id); }
  Vectord mean(std::uint32_t id) const;

  void add(std::uint32_t label, const Eigen::Ref<const Vectord>& x);
  void update(const Eigen::Ref<const Matrixd>& columns, std::span<const std::uint32_t> labels);

  static ClassStats from_tallies(Eigen::Index dim, std::map<std::uint32_t, ClassTally> tallies);

  friend bool operator==(const ClassStats&, const ClassStats&) = default;

 private:
  Eigen::Index dim_;
  std::uint64_t total_n_ = 0;
  std::map<std::uint32_t, ClassTally> tallies_;
};

ClassStats update_class_stats(ClassStats stats, const Dataset& batch);
ClassStats update_class_stats(ClassStats stats, std::span<const EmbeddingRecord> batch);

enum class HeadKind : std::uint8_t { ncm = 0, lda = 1, linear = 2 };

const char* to_string(HeadKind kind);

/// Linear classifier f(x) = W^T x + b; column k of `weights` scores `class_ids[k]`.
struct ClassifierHead {
  HeadKind kind = HeadKind::ncm;
  std::vector<std::uint32_t> class_ids;  // ascending
  Matrixd weights;                        // d x K
  Vectord biases;                         // K

  Eigen::Index dim() const { return weights.rows(); }
  std::size_t num_classes() const { return class_ids.size(); }

  friend bool operator==(const ClassifierHead&, const ClassifierHead&) = default;
};

ClassifierHead build_ncm(const ClassStats& stats);
ClassifierHead build_lda(const ClassStats& stats, const CovarianceEstimated& cov);

Vectord scores(const ClassifierHead& head, const Eigen::Ref<const Vectord>& x);
// Highest score wins; ties go to the smallest class id.
std::uint32_t predict(const ClassifierHead& head, const Eigen::Ref<const Vectord>& x);
std::vector<std::uint32_t> predict_columns(const ClassifierHead& head, const Eigen::Ref<const Matrixd>& xs);

/// Softmax cross-entropy head trained from zero initialization.
ClassifierHead train_linear(const Dataset& data, const TrainConfig& cfg, TrainTrace* trace = nullptr);

// HED1: magic, kind u8, K u32, d u32, class ids u32, column-major weights f64, biases f64.
void write_head(std::ostream& out, const ClassifierHead& head);
ClassifierHead read_head(std::istream& in);
void save_head(const std::filesystem::path& path, const ClassifierHead& head);
ClassifierHead load_head(const std::filesystem::path& path);

// CST1: magic, d u32, K u32, then per class id u32, n u64, sum f64 x d.
void write_class_stats(std::ostream& out, const ClassStats& stats);
ClassStats read_class_stats(std::istream& in);
void save_class_stats(const std::filesystem::path& path, const ClassStats& stats);
ClassStats load_class_stats(const std::filesystem::path& path);

}  // namespace cil
