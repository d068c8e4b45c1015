#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

#include "cil/dataset.hpp"
#include "cil/training.hpp"

namespace cil {

enum class AdapterKind : std::uint8_t { identity = 0, film = 1, full = 2 };

const char* to_string(AdapterKind kind);

/// Frozen embedding transform applied before the head.
///
/// film: x -> gamma .* x + beta, the embedding-level stand-in for FiLM layers
/// inside a backbone (2d parameters). full: x -> M x + c, the stand-in for
/// full-body fine-tuning (d^2 + d parameters). identity carries no parameters.
class AdapterParams {
 public:
  static AdapterParams identity(Eigen::Index dim);
  static AdapterParams film(Vectord gamma, Vectord beta);
  static AdapterParams full(Matrixd m, Vectord c);
  // Parameters that reproduce the identity map for the given kind.
  static AdapterParams initial(AdapterKind kind, Eigen::Index dim);

  AdapterKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t parameter_count() const;

  const Vectord& gamma() const { return gamma_; }
  const Vectord& beta() const { return beta_; }
  const Matrixd& m() const { return m_; }
  const Vectord& c() const { return c_; }

  Vectord apply(const Eigen::Ref<const Vectord>& x) const;
  Matrixd apply_columns(const Eigen::Ref<const Matrixd>& xs) const;

  friend bool operator==(const AdapterParams&, const AdapterParams&) = default;

 private:
  AdapterParams(AdapterKind kind, Eigen::Index dim) : kind_(kind), dim_(dim) {}

  AdapterKind kind_ = AdapterKind::identity;
  Eigen::Index dim_ = 0;
  Vectord gamma_, beta_;
  Matrixd m_;
  Vectord c_;
};

inline Vectord apply(const AdapterParams& p, const Eigen::Ref<const Vectord>& x) { return p.apply(x); }

struct JointGradient {
  Vectord gamma, beta;  // film
  Matrixd m;            // full
  Vectord c;            // full
  Matrixd weights;      // temporary head
  Vectord biases;
};

/// Mean softmax cross-entropy of head(adapter(x)); fills `grad` when non-null.
double joint_loss(const AdapterParams& adapter, const Matrixd& weights, const Vectord& biases,
                  const Eigen::Ref<const Matrixd>& inputs, std::span<const int> targets,
                  JointGradient* grad = nullptr);

/// Trains an adapter jointly with a zero-initialized linear head on session-1
/// data and returns only the adapter; the head is dropped.
AdapterParams first_session_adapt(const Dataset& data, AdapterKind kind, const TrainConfig& cfg,
                                  TrainTrace* trace = nullptr);

// ADP1: magic, kind u8, d u32, then gamma,beta or row-major M,c as f64.
void write_adapter(std::ostream& out, const AdapterParams& p);
AdapterParams read_adapter(std::istream& in);
void save_adapter(const std::filesystem::path& path, const AdapterParams& p);
AdapterParams load_adapter(const std::filesystem::path& path);

}  // namespace cil
