#include "cil/training.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace cil {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be finite and >= 0");
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (lr_decay_every <= 0) fail("lr_decay_every must be positive");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0)) fail("lr_decay_factor must lie in (0, 1]");
}

double TrainConfig::rate_at_epoch(int epoch) const {
  return learning_rate * std::pow(lr_decay_factor, epoch / lr_decay_every);
}

TrainConfig linear_head_defaults() { return TrainConfig{}; }

TrainConfig film_adapter_defaults() {
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.epochs = 150;
  cfg.optimizer = OptimizerKind::adam;
  return cfg;
}

TrainConfig full_adapter_defaults() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.epochs = 200;
  cfg.optimizer = OptimizerKind::adam;
  return cfg;
}

double softmax_cross_entropy(const Eigen::Ref<const Matrixd>& inputs, std::span<const int> targets,
                             const Matrixd& weights, const Vectord& biases, SoftmaxGradient* grad) {
  const Eigen::Index batch = inputs.cols();
  const Eigen::Index classes = weights.cols();
  require_same_dim(inputs.rows(), weights.rows(), "softmax inputs vs weights");
  require_same_dim(biases.size(), classes, "softmax biases vs weights");
  require_same_dim(static_cast<Eigen::Index>(targets.size()), batch, "softmax targets");
  if (batch == 0) throw Error(ErrorCode::InsufficientData, "softmax loss of an empty batch");

  Matrixd logits = weights.transpose() * inputs;
  logits.colwise() += biases;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = targets[static_cast<std::size_t>(i)];
    if (y < 0 || y >= classes) throw Error(ErrorCode::InvalidConfig, "softmax target out of range");
    auto col = logits.col(i);
    const double peak = col.maxCoeff();
    const double target_logit = col(y) - peak;
    col.array() = (col.array() - peak).exp();
    const double total = col.sum();
    loss += std::log(total) - target_logit;
    col /= total;  // now softmax probabilities
    col(y) -= 1.0;
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  loss *= inv_batch;

  if (grad != nullptr) {
    logits *= inv_batch;  // dL/dlogits
    grad->weights.noalias() = inputs * logits.transpose();
    grad->biases = logits.rowwise().sum();
    grad->inputs.noalias() = weights * logits;
  }
  return loss;
}

TrainTrace run_minibatch_training(Eigen::Index n, const TrainConfig& cfg,
                                  const std::function<double(std::span<const Eigen::Index>, double)>& step,
                                  const std::function<double()>& full_loss) {
  cfg.validate();
  auto check = [](double loss, const char* where) {
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::NonFiniteLoss, std::string("loss diverged ") + where + "; lower the learning rate");
    }
    return loss;
  };

  TrainTrace trace;
  trace.initial_loss = check(full_loss(), "at initialization");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(cfg.seed);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = cfg.rate_at_epoch(epoch);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      sum += check(step(std::span<const Eigen::Index>(order).subspan(start, len), lr), "during training");
      ++batches;
    }
    trace.epoch_loss.push_back(batches == 0 ? 0.0 : sum / static_cast<double>(batches));
  }
  trace.final_loss = check(full_loss(), "after training");
  return trace;
}

}  // namespace cil
