#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cil/linalg.hpp"

namespace cil {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 256;
  double momentum = 0.9;  // SGD momentum, or Adam's first-moment decay
  std::uint64_t seed = 0;
  int lr_decay_every = 50;
  double lr_decay_factor = 0.5;
  OptimizerKind optimizer = OptimizerKind::sgd;

  // Zero epochs and a zero learning rate are accepted; both leave parameters at initialization.
  void validate() const;
  double rate_at_epoch(int epoch) const;
};

TrainConfig linear_head_defaults();
TrainConfig film_adapter_defaults();
TrainConfig full_adapter_defaults();

struct TrainTrace {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
};

struct SoftmaxGradient {
  Matrixd weights;  // d x K
  Vectord biases;   // K
  Matrixd inputs;   // d x B
};

/// Mean softmax cross-entropy of logits W^T X + b against `targets`
/// (positions in [0, K)). Fills `grad` when non-null.
double softmax_cross_entropy(const Eigen::Ref<const Matrixd>& inputs, std::span<const int> targets,
                             const Matrixd& weights, const Vectord& biases,
                             SoftmaxGradient* grad = nullptr);

/// Per-parameter-block optimizer state. Blocks are addressed by slot index in
/// the order the caller first uses them.
class GradientStepper {
 public:
  explicit GradientStepper(const TrainConfig& cfg) : cfg_(cfg) {}

  void begin_step() { ++steps_; }

  template <typename P, typename G>
  void update(std::size_t slot, Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, double lr) {
    if (first_.size() <= slot) {
      first_.resize(slot + 1);
      second_.resize(slot + 1);
    }
    auto& m = first_[slot];
    if (m.size() != grad.size()) {
      m = Eigen::ArrayXd::Zero(grad.size());
      second_[slot] = Eigen::ArrayXd::Zero(grad.size());
    }
    const Eigen::ArrayXd g = grad.derived().reshaped().array();
    Eigen::ArrayXd delta;
    if (cfg_.optimizer == OptimizerKind::sgd) {
      m = cfg_.momentum * m + g;
      delta = lr * m;
    } else {
      auto& v = second_[slot];
      m = cfg_.momentum * m + (1.0 - cfg_.momentum) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.square();
      const double c1 = 1.0 - std::pow(cfg_.momentum, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
      delta = lr * (m / c1) / ((v / c2).sqrt() + kEpsilon);
    }
    param.derived().reshaped().array() -= delta;
  }

  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

 private:
  TrainConfig cfg_;
  std::uint64_t steps_ = 0;
  std::vector<Eigen::ArrayXd> first_;
  std::vector<Eigen::ArrayXd> second_;
};

/// Seeded minibatch loop shared by head and adapter training.
/// `step(batch, lr)` applies one update and returns the minibatch loss;
/// `full_loss()` evaluates the objective on all data. Throws NonFiniteLoss.
TrainTrace run_minibatch_training(Eigen::Index n, const TrainConfig& cfg,
                                  const std::function<double(std::span<const Eigen::Index>, double)>& step,
                                  const std::function<double()>& full_loss);

}  // namespace cil
