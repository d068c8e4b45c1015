#include "cil/heads.hpp"

#include <cmath>
#include <fstream>

#include "cil/binary_io.hpp"

namespace cil {

ClassStats::ClassStats(Eigen::Index dim) : dim_(dim) {
  if (dim <= 0) throw Error(ErrorCode::InvalidConfig, "class stats dimension must be positive");
}

std::vector<std::uint32_t> ClassStats::class_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tallies_.size());
  for (const auto& [id, tally] : tallies_) ids.push_back(id);
  return ids;
}

Vectord ClassStats::mean(std::uint32_t id) const {
  const auto it = tallies_.find(id);
  if (it == tallies_.end() || it->second.n == 0) {
    throw Error(ErrorCode::EmptyClass, "class " + std::to_string(id) + " has no samples");
  }
  return it->second.sum / static_cast<double>(it->second.n);
}

void ClassStats::add(std::uint32_t label, const Eigen::Ref<const Vectord>& x) {
  require_same_dim(x.size(), dim_, "class stats update");
  require_finite(x, "class stats update");
  auto [it, inserted] = tallies_.try_emplace(label, ClassTally{Vectord::Zero(dim_), 0});
  it->second.sum += x;
  ++it->second.n;
  ++total_n_;
}

void ClassStats::update(const Eigen::Ref<const Matrixd>& columns, std::span<const std::uint32_t> labels) {
  require_same_dim(columns.rows(), dim_, "class stats update");
  require_same_dim(columns.cols(), static_cast<Eigen::Index>(labels.size()), "class stats labels");
  require_finite(columns, "class stats update");
  for (Eigen::Index i = 0; i < columns.cols(); ++i) add(labels[static_cast<std::size_t>(i)], columns.col(i));
}

ClassStats ClassStats::from_tallies(Eigen::Index dim, std::map<std::uint32_t, ClassTally> tallies) {
  ClassStats stats(dim);
  for (const auto& [id, tally] : tallies) {
    require_same_dim(tally.sum.size(), dim, "class tally");
    require_finite(tally.sum, "class tally");
    if (tally.n == 0) throw Error(ErrorCode::EmptyClass, "class " + std::to_string(id) + " has no samples");
    stats.total_n_ += tally.n;
  }
  stats.tallies_ = std::move(tallies);
  return stats;
}

ClassStats update_class_stats(ClassStats stats, const Dataset& batch) {
  stats.update(batch.features, batch.labels);
  return stats;
}

ClassStats update_class_stats(ClassStats stats, std::span<const EmbeddingRecord> batch) {
  for (const auto& r : batch) {
    require_same_dim(r.features.size(), stats.dim(), "class stats update");
    require_finite(r.features, "class stats update");
  }
  for (const auto& r : batch) stats.add(r.label, r.features);
  return stats;
}

const char* to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::ncm: return "ncm";
    case HeadKind::lda: return "lda";
    case HeadKind::linear: return "linear";
  }
  return "unknown";
}

namespace {

double prior_bias(std::uint64_t n_k, std::uint64_t total, const Vectord& mean, const Vectord& weight) {
  return std::log(static_cast<double>(n_k) / static_cast<double>(total)) - 0.5 * mean.dot(weight);
}

void require_nonempty(const ClassStats& stats) {
  if (stats.num_classes() == 0) throw Error(ErrorCode::EmptyClass, "no classes to build a head from");
}

}  // namespace

ClassifierHead build_ncm(const ClassStats& stats) {
  require_nonempty(stats);
  ClassifierHead head;
  head.kind = HeadKind::ncm;
  head.class_ids = stats.class_ids();
  const auto classes = static_cast<Eigen::Index>(head.class_ids.size());
  head.weights.resize(stats.dim(), classes);
  head.biases.resize(classes);
  Eigen::Index k = 0;
  for (const auto& [id, tally] : stats.tallies()) {
    const Vectord mu = stats.mean(id);
    head.weights.col(k) = mu;
    head.biases(k) = prior_bias(tally.n, stats.total_n(), mu, mu);
    ++k;
  }
  return head;
}

ClassifierHead build_lda(const ClassStats& stats, const CovarianceEstimated& cov) {
  require_nonempty(stats);
  require_same_dim(cov.s_reg.rows(), stats.dim(), "covariance vs class stats");
  const SpdFactor<double> factor(cov.s_reg);

  ClassifierHead head;
  head.kind = HeadKind::lda;
  head.class_ids = stats.class_ids();
  const auto classes = static_cast<Eigen::Index>(head.class_ids.size());
  Matrixd means(stats.dim(), classes);
  Eigen::Index k = 0;
  for (const auto& [id, tally] : stats.tallies()) means.col(k++) = stats.mean(id);

  head.weights = factor.solve(means);
  head.biases.resize(classes);
  k = 0;
  for (const auto& [id, tally] : stats.tallies()) {
    const Vectord mu = means.col(k);
    const Vectord w = head.weights.col(k);
    head.biases(k) = prior_bias(tally.n, stats.total_n(), mu, w);
    ++k;
  }
  return head;
}

Vectord scores(const ClassifierHead& head, const Eigen::Ref<const Vectord>& x) {
  require_same_dim(x.size(), head.dim(), "head input");
  Vectord s = head.weights.transpose() * x;
  s += head.biases;
  return s;
}

std::uint32_t predict(const ClassifierHead& head, const Eigen::Ref<const Vectord>& x) {
  const Vectord s = scores(head, x);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k)
    if (s(k) > s(best)) best = k;
  return head.class_ids.at(static_cast<std::size_t>(best));
}

std::vector<std::uint32_t> predict_columns(const ClassifierHead& head, const Eigen::Ref<const Matrixd>& xs) {
  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(xs.cols()));
  Vectord x(xs.rows());
  for (Eigen::Index i = 0; i < xs.cols(); ++i) {
    x = xs.col(i);
    out.push_back(predict(head, x));
  }
  return out;
}

ClassifierHead train_linear(const Dataset& data, const TrainConfig& cfg, TrainTrace* trace) {
  cfg.validate();
  ClassifierHead head;
  head.kind = HeadKind::linear;
  head.class_ids = data.classes();
  if (head.class_ids.size() < 2) throw Error(ErrorCode::SingleClass, "linear head needs at least 2 classes");
  require_finite(data.features, "training features");
  const auto classes = static_cast<Eigen::Index>(head.class_ids.size());
  const std::vector<int> targets = label_positions(data.labels, head.class_ids);
  head.weights = Matrixd::Zero(data.dim(), classes);
  head.biases = Vectord::Zero(classes);

  GradientStepper stepper(cfg);
  SoftmaxGradient grad;
  Matrixd batch_x;
  std::vector<int> batch_y;
  auto step = [&](std::span<const Eigen::Index> batch, double lr) {
    batch_x.resize(data.dim(), static_cast<Eigen::Index>(batch.size()));
    batch_y.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch_x.col(static_cast<Eigen::Index>(i)) = data.features.col(batch[i]);
      batch_y.push_back(targets[static_cast<std::size_t>(batch[i])]);
    }
    const double loss = softmax_cross_entropy(batch_x, batch_y, head.weights, head.biases, &grad);
    stepper.begin_step();
    stepper.update(0, head.weights, grad.weights, lr);
    stepper.update(1, head.biases, grad.biases, lr);
    return loss;
  };
  auto full_loss = [&] { return softmax_cross_entropy(data.features, targets, head.weights, head.biases); };

  TrainTrace t = run_minibatch_training(data.size(), cfg, step, full_loss);
  if (trace != nullptr) *trace = std::move(t);
  return head;
}

void write_head(std::ostream& out, const ClassifierHead& head) {
  const auto d = head.dim();
  const auto classes = static_cast<Eigen::Index>(head.class_ids.size());
  require_same_dim(head.weights.cols(), classes, "head weights");
  require_same_dim(head.biases.size(), classes, "head biases");
  binary::write_magic(out, "HED1");
  binary::write(out, static_cast<std::uint8_t>(head.kind));
  binary::write(out, static_cast<std::uint32_t>(classes));
  binary::write(out, static_cast<std::uint32_t>(d));
  for (const auto id : head.class_ids) binary::write(out, id);
  for (Eigen::Index k = 0; k < classes; ++k)
    for (Eigen::Index i = 0; i < d; ++i) binary::write(out, head.weights(i, k));
  for (Eigen::Index k = 0; k < classes; ++k) binary::write(out, head.biases(k));
  binary::require_good(out, "head");
}

ClassifierHead read_head(std::istream& in) {
  binary::expect_magic(in, "HED1");
  ClassifierHead head;
  const auto kind = binary::read<std::uint8_t>(in, "head header");
  if (kind > static_cast<std::uint8_t>(HeadKind::linear)) throw Error(ErrorCode::BadMagic, "unknown head kind");
  head.kind = static_cast<HeadKind>(kind);
  const auto classes = static_cast<Eigen::Index>(binary::read<std::uint32_t>(in, "head header"));
  const auto d = static_cast<Eigen::Index>(binary::read<std::uint32_t>(in, "head header"));
  for (Eigen::Index k = 0; k < classes; ++k) head.class_ids.push_back(binary::read<std::uint32_t>(in, "head ids"));
  if (!std::is_sorted(head.class_ids.begin(), head.class_ids.end())) {
    throw Error(ErrorCode::InvalidConfig, "head class ids are not ascending");
  }
  head.weights.resize(d, classes);
  for (Eigen::Index k = 0; k < classes; ++k)
    for (Eigen::Index i = 0; i < d; ++i) head.weights(i, k) = binary::read<double>(in, "head weights");
  head.biases.resize(classes);
  for (Eigen::Index k = 0; k < classes; ++k) head.biases(k) = binary::read<double>(in, "head biases");
  require_finite(head.weights, "head weights");
  require_finite(head.biases, "head biases");
  return head;
}

void save_head(const std::filesystem::path& path, const ClassifierHead& head) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_head(out, head);
}

ClassifierHead load_head(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  auto head = read_head(in);
  binary::expect_eof(in, "head");
  return head;
}

void write_class_stats(std::ostream& out, const ClassStats& stats) {
  binary::write_magic(out, "CST1");
  binary::write(out, static_cast<std::uint32_t>(stats.dim()));
  binary::write(out, static_cast<std::uint32_t>(stats.num_classes()));
  for (const auto& [id, tally] : stats.tallies()) {
    binary::write(out, id);
    binary::write(out, tally.n);
    for (Eigen::Index i = 0; i < stats.dim(); ++i) binary::write(out, tally.sum(i));
  }
  binary::require_good(out, "class stats");
}

ClassStats read_class_stats(std::istream& in) {
  binary::expect_magic(in, "CST1");
  const auto d = static_cast<Eigen::Index>(binary::read<std::uint32_t>(in, "class stats header"));
  const auto classes = binary::read<std::uint32_t>(in, "class stats header");
  std::map<std::uint32_t, ClassTally> tallies;
  for (std::uint32_t k = 0; k < classes; ++k) {
    const auto id = binary::read<std::uint32_t>(in, "class stats id");
    ClassTally tally{Vectord(d), binary::read<std::uint64_t>(in, "class stats count")};
    for (Eigen::Index i = 0; i < d; ++i) tally.sum(i) = binary::read<double>(in, "class stats sum");
    if (!tallies.emplace(id, std::move(tally)).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate class id " + std::to_string(id));
    }
  }
  return ClassStats::from_tallies(d, std::move(tallies));
}

void save_class_stats(const std::filesystem::path& path, const ClassStats& stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_class_stats(out, stats);
}

ClassStats load_class_stats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  auto stats = read_class_stats(in);
  binary::expect_eof(in, "class stats");
  return stats;
}

}  // namespace cil
