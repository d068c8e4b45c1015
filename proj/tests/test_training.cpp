#include <doctest.h>

#include <cmath>
#include <random>

#include "cil/heads.hpp"
#include "cil/training.hpp"
#include "oracles.hpp"

using namespace cil;

namespace {

// Two classes on either side of a random hyperplane through the origin, margin >= 1.
Dataset separable(std::uint64_t seed, Eigen::Index d = 8, int n = 200) {
  std::mt19937_64 rng(seed);
  Vectord normal = oracle::gaussian_matrix(d, 1, rng);
  normal.normalize();
  std::uniform_real_distribution<double> offset(1.0, 3.0);
  Matrixd x(d, n);
  std::vector<std::uint32_t> y;
  for (int i = 0; i < n; ++i) {
    Vectord p = oracle::gaussian_matrix(d, 1, rng);
    p -= normal * normal.dot(p);
    const bool positive = i % 2 == 0;
    x.col(i) = p + (positive ? 1.0 : -1.0) * offset(rng) * normal;
    y.push_back(positive ? 1 : 0);
  }
  return {x, y};
}

double accuracy(const ClassifierHead& head, const Dataset& data) {
  const auto pred = predict_columns(head, data.features);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == data.labels[i];
  return static_cast<double>(ok) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("softmax cross-entropy equals ln K at uniform logits and is non-negative") {
  std::mt19937_64 rng(1);
  for (const int k : {2, 3, 10}) {
    const Matrixd x = oracle::gaussian_matrix(5, 4 * k, rng);
    std::vector<int> t;
    for (int i = 0; i < 4 * k; ++i) t.push_back(i % k);
    const double loss = softmax_cross_entropy(x, t, Matrixd::Zero(5, k), Vectord::Zero(k));
    CHECK(loss == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-14));
    const double other = softmax_cross_entropy(x, t, oracle::gaussian_matrix(5, k, rng), oracle::gaussian_matrix(k, 1, rng));
    CHECK(other >= 0.0);
  }
}

TEST_CASE("softmax cross-entropy survives extreme logits") {
  Matrixd x(1, 2);
  x << 1000.0, -1000.0;
  const std::vector<int> t{0, 0};
  Matrixd w(1, 2);
  w << 0.0, 1.0;
  const double loss = softmax_cross_entropy(x, t, w, Vectord::Zero(2));
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(500.0));
}

TEST_CASE("softmax gradients match central differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index d = 6, k = 4, b = 9;
    const Matrixd x = oracle::gaussian_matrix(d, b, rng);
    std::vector<int> t;
    for (int i = 0; i < b; ++i) t.push_back(static_cast<int>(rng() % k));
    Matrixd w = oracle::gaussian_matrix(d, k, rng, 0.5);
    Vectord bias = oracle::gaussian_matrix(k, 1, rng, 0.5);
    Matrixd xin = x;
    SoftmaxGradient g;
    softmax_cross_entropy(xin, t, w, bias, &g);
    auto f = [&] { return softmax_cross_entropy(xin, t, w, bias); };
    CHECK(oracle::relative_error(g.weights.reshaped(), oracle::central_difference(w, f)) <= 1e-5);
    CHECK(oracle::relative_error(g.biases, oracle::central_difference(bias, f)) <= 1e-5);
    CHECK(oracle::relative_error(g.inputs.reshaped(), oracle::central_difference(xin, f)) <= 1e-5);
  }
}

TEST_CASE("train_linear separates a linearly separable problem with defaults") {
  const Dataset data = separable(4);
  TrainTrace trace;
  const auto head = train_linear(data, linear_head_defaults(), &trace);
  CHECK(head.kind == HeadKind::linear);
  CHECK(accuracy(head, data) >= 0.99);
  CHECK(trace.initial_loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(trace.final_loss <= trace.initial_loss);
  CHECK(trace.epoch_loss.size() == 200);
  CHECK(trace.epoch_loss.back() <= trace.epoch_loss.front());
}

TEST_CASE("train_linear with zero learning rate returns the initialization") {
  TrainConfig cfg = linear_head_defaults();
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  const auto head = train_linear(separable(5), cfg);
  CHECK(head.weights.isZero(0));
  CHECK(head.biases.isZero(0));
}

TEST_CASE("train_linear is deterministic per seed") {
  const Dataset data = separable(6, 5, 300);
  TrainConfig cfg = linear_head_defaults();
  cfg.epochs = 20;
  cfg.batch_size = 32;
  cfg.seed = 9;
  const auto first = train_linear(data, cfg);
  CHECK(train_linear(data, cfg) == first);
  cfg.seed = 10;
  CHECK_FALSE(train_linear(data, cfg) == first);
}

TEST_CASE("train_linear error paths") {
  Dataset one(Matrixd::Ones(2, 3), {4, 4, 4});
  try {
    train_linear(one, linear_head_defaults());
    FAIL("expected SingleClass");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingleClass);
  }

  Dataset data = separable(7);
  data.features *= 1e150;
  TrainConfig cfg = linear_head_defaults();
  cfg.learning_rate = 1e10;
  cfg.epochs = 5;
  try {
    train_linear(data, cfg);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }

  cfg = linear_head_defaults();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(train_linear(separable(1), cfg), Error);
  cfg = linear_head_defaults();
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("step decay halves the rate every 50 epochs") {
  const TrainConfig cfg = linear_head_defaults();
  CHECK(cfg.rate_at_epoch(0) == 1e-3);
  CHECK(cfg.rate_at_epoch(49) == 1e-3);
  CHECK(cfg.rate_at_epoch(50) == 5e-4);
  CHECK(cfg.rate_at_epoch(199) == 1.25e-4);
}
