#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cil/heads.hpp"
#include "cil/synthetic.hpp"
#include "oracles.hpp"

using namespace cil;

namespace {

Vectord vec(std::initializer_list<double> v) {
  Vectord out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

ClassStats two_balanced(double scale = 1.0) {
  ClassStats stats(2);
  stats.add(1, scale * vec({2, 0}));
  stats.add(2, scale * vec({0, 2}));
  return stats;
}

CovarianceEstimated covariance_with_reg(const Matrixd& s_reg) {
  CovarianceEstimated cov;
  cov.s_reg = s_reg;
  cov.s = s_reg - Matrixd::Identity(s_reg.rows(), s_reg.cols());
  cov.mean = Vectord::Zero(s_reg.rows());
  cov.n = 2;
  return cov;
}

}  // namespace

TEST_CASE("update_class_stats examples") {
  const std::vector<EmbeddingRecord> one{{7, vec({1, 0})}};
  const auto s1 = update_class_stats(ClassStats(2), std::span<const EmbeddingRecord>(one));
  CHECK(s1.tallies().at(7).sum == vec({1, 0}));
  CHECK(s1.tallies().at(7).n == 1);

  const auto s2 = update_class_stats(s1, std::span<const EmbeddingRecord>(one));
  CHECK(s2.tallies().at(7).sum == vec({2, 0}));
  CHECK(s2.tallies().at(7).n == 2);
  CHECK(s2.total_n() == 2);

  const std::vector<EmbeddingRecord> bad{{1, vec({1, 0, 0})}};
  CHECK_THROWS_AS(update_class_stats(s1, std::span<const EmbeddingRecord>(bad)), Error);
}

TEST_CASE("class stats streamed over sessions equal the pooled batch") {
  std::mt19937_64 rng(8);
  const Matrixd x = oracle::gaussian_matrix(5, 90, rng);
  std::vector<std::uint32_t> labels;
  for (int i = 0; i < 90; ++i) labels.push_back(static_cast<std::uint32_t>(i % 6));
  const Dataset all(x, labels);

  ClassStats streamed(5);
  for (int s = 0; s < 3; ++s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = s * 30; i < (s + 1) * 30; ++i) idx.push_back(i);
    streamed = update_class_stats(streamed, all.subset(idx));
  }
  const ClassStats pooled = update_class_stats(ClassStats(5), all);
  CHECK(streamed.class_ids() == pooled.class_ids());
  CHECK(streamed.total_n() == pooled.total_n());
  std::uint64_t sum_n = 0;
  for (const auto& [id, t] : pooled.tallies()) {
    CHECK((t.sum - streamed.tallies().at(id).sum).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(t.n == streamed.tallies().at(id).n);
    sum_n += t.n;
  }
  CHECK(sum_n == pooled.total_n());
}

TEST_CASE("build_ncm examples") {
  ClassStats single(2);
  single.add(4, vec({1, 1}));
  const auto h1 = build_ncm(single);
  CHECK(h1.weights.col(0) == vec({1, 1}));
  CHECK(h1.biases(0) == -1.0);

  const auto h2 = build_ncm(two_balanced());
  CHECK(h2.class_ids == std::vector<std::uint32_t>{1, 2});
  CHECK(h2.biases(0) == doctest::Approx(std::log(0.5) - 2.0).epsilon(1e-15));
  CHECK(h2.biases(1) == doctest::Approx(-2.6931471805599454).epsilon(1e-12));

  ClassStats zero(2);
  zero.add(0, vec({0, 0}));
  zero.add(0, vec({0, 0}));
  zero.add(3, vec({1, 0}));
  const auto h3 = build_ncm(zero);
  CHECK(h3.weights.col(0).isZero(0));
  CHECK(h3.biases(0) == std::log(2.0 / 3.0));

  CHECK_THROWS_AS(build_ncm(ClassStats(2)), Error);
}

TEST_CASE("build_lda examples") {
  // S = 0 reduces to NCM bitwise.
  const auto stats = two_balanced();
  const auto lda = build_lda(stats, covariance_with_reg(Matrixd::Identity(2, 2)));
  const auto ncm = build_ncm(stats);
  CHECK(lda.weights == ncm.weights);
  CHECK(lda.biases == ncm.biases);

  Matrixd s_reg(2, 2);
  s_reg << 2, 0, 0, 1;
  const auto h = build_lda(stats, covariance_with_reg(s_reg));
  CHECK(h.weights.col(0).isApprox(vec({1, 0}), 1e-15));
  CHECK(h.weights.col(1).isApprox(vec({0, 2}), 1e-15));
  CHECK(h.biases(0) == doctest::Approx(std::log(0.5) - 1.0).epsilon(1e-14));
  CHECK(h.biases(1) == doctest::Approx(std::log(0.5) - 2.0).epsilon(1e-14));

  std::mt19937_64 rng(12);
  ClassStats single(4);
  const Vectord mu = oracle::gaussian_matrix(4, 1, rng);
  single.add(9, mu);
  const Matrixd spd = oracle::random_spd(4, rng);
  const auto hs = build_lda(single, covariance_with_reg(spd));
  CHECK(hs.biases(0) == doctest::Approx(-0.5 * mu.dot(spd.inverse() * mu)).epsilon(1e-10));

  Matrixd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(build_lda(stats, covariance_with_reg(bad)), Error);
}

TEST_CASE("LDA to NCM reduction holds bitwise for random stats") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 1 + trial * 3;
    ClassStats stats(d);
    const Matrixd x = oracle::gaussian_matrix(d, 40, rng, 3.0);
    for (Eigen::Index i = 0; i < 40; ++i) stats.add(static_cast<std::uint32_t>(i % 7) * 3, x.col(i));
    CovarianceEstimated cov;
    cov.s = Matrixd::Zero(d, d);
    cov.s_reg = Matrixd::Identity(d, d);
    cov.mean = Vectord::Zero(d);
    cov.n = 40;
    const auto lda = build_lda(stats, cov);
    const auto ncm = build_ncm(stats);
    CHECK(lda.weights == ncm.weights);
    CHECK(lda.biases == ncm.biases);
  }
}

TEST_CASE("class prior terms sum to one") {
  ClassStats stats(1);
  const std::vector<std::pair<std::uint32_t, int>> counts{{0, 3}, {5, 11}, {9, 1}};
  for (const auto& [id, n] : counts)
    for (int i = 0; i < n; ++i) stats.add(id, vec({static_cast<double>(i)}));
  const auto head = build_ncm(stats);
  double total = 0.0;
  for (Eigen::Index k = 0; k < head.biases.size(); ++k) {
    const Vectord mu = head.weights.col(k);
    total += std::exp(head.biases(k) + 0.5 * mu.dot(mu));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict examples") {
  ClassifierHead head;
  head.kind = HeadKind::linear;
  head.class_ids = {5, 9};
  head.weights = Matrixd::Zero(1, 2);
  head.biases = vec({3.0, 1.0});
  CHECK(predict(head, vec({0.0})) == 5);
  head.biases = vec({1.0, 1.0});
  CHECK(predict(head, vec({0.0})) == 5);
  head.biases = vec({1.0, 3.0});
  CHECK(predict(head, vec({0.0})) == 9);
  CHECK_THROWS_AS(predict(head, vec({0.0, 1.0})), Error);
}

TEST_CASE("appending a class leaves existing scores untouched") {
  std::mt19937_64 rng(30);
  ClassifierHead head;
  head.class_ids = {1, 2, 3};
  head.weights = oracle::gaussian_matrix(4, 3, rng);
  head.biases = oracle::gaussian_matrix(3, 1, rng);
  ClassifierHead wider = head;
  wider.class_ids.push_back(8);
  wider.weights.conservativeResize(4, 4);
  wider.weights.col(3) = oracle::gaussian_matrix(4, 1, rng);
  wider.biases.conservativeResize(4);
  wider.biases(3) = 0.7;
  for (int i = 0; i < 20; ++i) {
    const Vectord x = oracle::gaussian_matrix(4, 1, rng);
    CHECK(scores(wider, x).head(3) == scores(head, x));
  }
}

TEST_CASE("LDA separates well-separated Gaussian clusters") {
  SyntheticSpec spec;
  spec.classes = 6;
  spec.dim = 8;
  spec.train_per_class = 100;
  spec.test_per_class = 10;
  spec.mean_scale = 6.0;
  spec.min_separation = 12.0;
  spec.seed = 3;
  const auto data = generate_synthetic(spec);
  const auto stats = update_class_stats(ClassStats(8), data.train);
  const auto head = build_lda(stats, finalize(inc_update(RunningMomentsd(8), data.train.features)));
  const auto pred = predict_columns(head, data.train.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.train.labels[i];
  CHECK(correct == pred.size());
}

TEST_CASE("HED1 and CST1 round trips") {
  std::mt19937_64 rng(6);
  ClassStats stats(3);
  const Matrixd x = oracle::gaussian_matrix(3, 12, rng);
  for (Eigen::Index i = 0; i < 12; ++i) stats.add(static_cast<std::uint32_t>(10 + i % 4), x.col(i));
  const auto head = build_lda(stats, finalize(inc_update(RunningMomentsd(3), x)));

  std::stringstream hb;
  write_head(hb, head);
  const std::string bytes = hb.str();
  CHECK(bytes.size() == 4 + 1 + 4 + 4 + 4 * 4 + 3 * 4 * 8 + 4 * 8);
  CHECK(bytes.substr(0, 4) == "HED1");
  CHECK(bytes[4] == static_cast<char>(HeadKind::lda));
  CHECK(read_head(hb) == head);

  std::stringstream sb;
  write_class_stats(sb, stats);
  CHECK(read_class_stats(sb) == stats);
}
