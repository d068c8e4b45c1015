#include "cil/adapter.hpp"

#include <fstream>

#include "cil/binary_io.hpp"

namespace cil {

const char* to_string(AdapterKind kind) {
  switch (kind) {
    case AdapterKind::identity: return "identity";
    case AdapterKind::film: return "film";
    case AdapterKind::full: return "full";
  }
  return "unknown";
}

AdapterParams AdapterParams::identity(Eigen::Index dim) {
  if (dim <= 0) throw Error(ErrorCode::InvalidConfig, "adapter dimension must be positive");
  return AdapterParams(AdapterKind::identity, dim);
}

AdapterParams AdapterParams::film(Vectord gamma, Vectord beta) {
  require_same_dim(gamma.size(), beta.size(), "film gamma vs beta");
  if (gamma.size() == 0) throw Error(ErrorCode::InvalidConfig, "adapter dimension must be positive");
  require_finite(gamma, "film gamma");
  require_finite(beta, "film beta");
  AdapterParams p(AdapterKind::film, gamma.size());
  p.gamma_ = std::move(gamma);
  p.beta_ = std::move(beta);
  return p;
}

AdapterParams AdapterParams::full(Matrixd m, Vectord c) {
  require_same_dim(m.rows(), c.size(), "full adapter M vs c");
  require_same_dim(m.cols(), c.size(), "full adapter M vs c");
  if (c.size() == 0) throw Error(ErrorCode::InvalidConfig, "adapter dimension must be positive");
  require_finite(m, "full adapter M");
  require_finite(c, "full adapter c");
  AdapterParams p(AdapterKind::full, c.size());
  p.m_ = std::move(m);
  p.c_ = std::move(c);
  return p;
}

AdapterParams AdapterParams::initial(AdapterKind kind, Eigen::Index dim) {
  switch (kind) {
    case AdapterKind::identity: return identity(dim);
    case AdapterKind::film: return film(Vectord::Ones(dim), Vectord::Zero(dim));
    case AdapterKind::full: return full(Matrixd::Identity(dim, dim), Vectord::Zero(dim));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown adapter kind");
}

std::size_t AdapterParams::parameter_count() const {
  const auto d = static_cast<std::size_t>(dim_);
  switch (kind_) {
    case AdapterKind::identity: return 0;
    case AdapterKind::film: return 2 * d;
    case AdapterKind::full: return d * d + d;
  }
  return 0;
}

Vectord AdapterParams::apply(const Eigen::Ref<const Vectord>& x) const {
  require_same_dim(x.size(), dim_, "adapter input");
  switch (kind_) {
    case AdapterKind::identity: return x;
    case AdapterKind::film: return gamma_.cwiseProduct(x) + beta_;
    case AdapterKind::full: return m_ * x + c_;
  }
  return x;
}

Matrixd AdapterParams::apply_columns(const Eigen::Ref<const Matrixd>& xs) const {
  require_same_dim(xs.rows(), dim_, "adapter input");
  switch (kind_) {
    case AdapterKind::identity: return xs;
    case AdapterKind::film: return (xs.array().colwise() * gamma_.array()).colwise() + beta_.array();
    case AdapterKind::full: {
      Matrixd out = m_ * xs;
      out.colwise() += c_;
      return out;
    }
  }
  return xs;
}

double joint_loss(const AdapterParams& adapter, const Matrixd& weights, const Vectord& biases,
                  const Eigen::Ref<const Matrixd>& inputs, std::span<const int> targets, JointGradient* grad) {
  const Matrixd adapted = adapter.apply_columns(inputs);
  if (grad == nullptr) return softmax_cross_entropy(adapted, targets, weights, biases);

  SoftmaxGradient sg;
  const double loss = softmax_cross_entropy(adapted, targets, weights, biases, &sg);
  grad->weights = std::move(sg.weights);
  grad->biases = std::move(sg.biases);
  switch (adapter.kind()) {
    case AdapterKind::identity:
      break;
    case AdapterKind::film:
      grad->gamma = sg.inputs.cwiseProduct(inputs).rowwise().sum();
      grad->beta = sg.inputs.rowwise().sum();
      break;
    case AdapterKind::full:
      grad->m.noalias() = sg.inputs * inputs.transpose();
      grad->c = sg.inputs.rowwise().sum();
      break;
  }
  return loss;
}

AdapterParams first_session_adapt(const Dataset& data, AdapterKind kind, const TrainConfig& cfg,
                                  TrainTrace* trace) {
  cfg.validate();
  const auto classes = data.classes();
  if (classes.size() < 2) throw Error(ErrorCode::SingleClass, "adaptation needs at least 2 classes");
  require_finite(data.features, "adaptation features");
  const std::vector<int> targets = label_positions(data.labels, classes);
  const Eigen::Index d = data.dim();

  Vectord gamma = Vectord::Ones(d), beta = Vectord::Zero(d), c = Vectord::Zero(d);
  Matrixd m = Matrixd::Identity(d, d);
  Matrixd weights = Matrixd::Zero(d, static_cast<Eigen::Index>(classes.size()));
  Vectord biases = Vectord::Zero(static_cast<Eigen::Index>(classes.size()));
  auto current = [&] {
    switch (kind) {
      case AdapterKind::film: return AdapterParams::film(gamma, beta);
      case AdapterKind::full: return AdapterParams::full(m, c);
      case AdapterKind::identity: break;
    }
    return AdapterParams::identity(d);
  };

  GradientStepper stepper(cfg);
  JointGradient grad;
  Matrixd batch_x;
  std::vector<int> batch_y;
  auto step = [&](std::span<const Eigen::Index> batch, double lr) {
    batch_x.resize(d, static_cast<Eigen::Index>(batch.size()));
    batch_y.clear();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      batch_x.col(static_cast<Eigen::Index>(i)) = data.features.col(batch[i]);
      batch_y.push_back(targets[static_cast<std::size_t>(batch[i])]);
    }
    const double loss = joint_loss(current(), weights, biases, batch_x, batch_y, &grad);
    stepper.begin_step();
    stepper.update(0, weights, grad.weights, lr);
    stepper.update(1, biases, grad.biases, lr);
    if (kind == AdapterKind::film) {
      stepper.update(2, gamma, grad.gamma, lr);
      stepper.update(3, beta, grad.beta, lr);
    } else if (kind == AdapterKind::full) {
      stepper.update(2, m, grad.m, lr);
      stepper.update(3, c, grad.c, lr);
    }
    return loss;
  };
  auto full_loss = [&] { return joint_loss(current(), weights, biases, data.features, targets); };

  TrainTrace t = run_minibatch_training(data.size(), cfg, step, full_loss);
  if (trace != nullptr) *trace = std::move(t);
  return current();
}

void write_adapter(std::ostream& out, const AdapterParams& p) {
  const auto d = p.dim();
  binary::write_magic(out, "ADP1");
  binary::write(out, static_cast<std::uint8_t>(p.kind()));
  binary::write(out, static_cast<std::uint32_t>(d));
  if (p.kind() == AdapterKind::film) {
    for (Eigen::Index i = 0; i < d; ++i) binary::write(out, p.gamma()(i));
    for (Eigen::Index i = 0; i < d; ++i) binary::write(out, p.beta()(i));
  } else if (p.kind() == AdapterKind::full) {
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) binary::write(out, p.m()(i, j));
    for (Eigen::Index i = 0; i < d; ++i) binary::write(out, p.c()(i));
  }
  binary::require_good(out, "adapter");
}

AdapterParams read_adapter(std::istream& in) {
  binary::expect_magic(in, "ADP1");
  const auto kind = binary::read<std::uint8_t>(in, "adapter header");
  const auto d = static_cast<Eigen::Index>(binary::read<std::uint32_t>(in, "adapter header"));
  auto read_vec = [&](const char* what) {
    Vectord v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = binary::read<double>(in, what);
    return v;
  };
  switch (static_cast<AdapterKind>(kind)) {
    case AdapterKind::identity: return AdapterParams::identity(d);
    case AdapterKind::film: {
      Vectord gamma = read_vec("adapter gamma");
      Vectord beta = read_vec("adapter beta");
      return AdapterParams::film(std::move(gamma), std::move(beta));
    }
    case AdapterKind::full: {
      Matrixd m(d, d);
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = binary::read<double>(in, "adapter M");
      Vectord c = read_vec("adapter c");
      return AdapterParams::full(std::move(m), std::move(c));
    }
  }
  throw Error(ErrorCode::BadMagic, "unknown adapter kind " + std::to_string(kind));
}

void save_adapter(const std::filesystem::path& path, const AdapterParams& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string());
  write_adapter(out, p);
}

AdapterParams load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  auto p = read_adapter(in);
  binary::expect_eof(in, "adapter");
  return p;
}

}  // namespace cil
