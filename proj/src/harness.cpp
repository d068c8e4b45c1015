#include "cil/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "cil/parallel.hpp"

namespace cil {

const char* to_string(Method method) {
  switch (method) {
    case Method::na: return "na";
    case Method::fsa_full: return "fsa_full";
    case Method::fsa_film: return "fsa_film";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "na") return Method::na;
  if (name == "fsa_full" || name == "fsa") return Method::fsa_full;
  if (name == "fsa_film") return Method::fsa_film;
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + name + "'");
}

AdapterKind adapter_kind_for(Method method) {
  switch (method) {
    case Method::na: return AdapterKind::identity;
    case Method::fsa_full: return AdapterKind::full;
    case Method::fsa_film: return AdapterKind::film;
  }
  return AdapterKind::identity;
}

TrainConfig RunConfig::adapter_config() const {
  TrainConfig cfg = adapter_train.value_or(method == Method::fsa_full ? full_adapter_defaults()
                                                                      : film_adapter_defaults());
  cfg.seed = seed;
  return cfg;
}

double ppdr(double acc_first, double acc_last) {
  if (!(acc_first > 0.0)) throw Error(ErrorCode::ZeroFirstAccuracy, "PPDR needs a positive first-session accuracy");
  return 100.0 * (acc_first - acc_last) / acc_first;
}

namespace {

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

bool same_outcome(const RunResult& a, const RunResult& b) {
  return a.method == b.method && a.seed == b.seed && a.sessions == b.sessions &&
         a.per_session_accuracy == b.per_session_accuracy && bitwise_equal(a.ppdr, b.ppdr) &&
         a.final_head == b.final_head && a.adapter == b.adapter && a.adapter_loss_curve == b.adapter_loss_curve;
}

CilRunner::CilRunner(const Dataset& train, const Dataset& test, SessionSchedule schedule, RunConfig cfg)
    : train_(train), test_(test), schedule_(std::move(schedule)), cfg_(std::move(cfg)) {
  check_schedule();
  const auto d = train_.dim();
  state_.emplace(CilState{AdapterParams::identity(d), RunningMomentsd(d), ClassStats(d), 0, {}});
}

CilRunner::CilRunner(const Dataset& train, const Dataset& test, SessionSchedule schedule, RunConfig cfg,
                     CilState resume)
    : train_(train), test_(test), schedule_(std::move(schedule)), cfg_(std::move(cfg)) {
  check_schedule();
  const auto d = train_.dim();
  require_same_dim(resume.moments.dim(), d, "resumed moments");
  require_same_dim(resume.stats.dim(), d, "resumed class stats");
  require_same_dim(resume.adapter.dim(), d, "resumed adapter");
  if (resume.sessions_completed > schedule_.size() ||
      resume.accuracy_history.size() != resume.sessions_completed) {
    throw Error(ErrorCode::InvalidConfig, "resumed state does not fit the schedule");
  }
  if (resume.sessions_completed > 0 && resume.adapter.kind() != adapter_kind_for(cfg_.method)) {
    throw Error(ErrorCode::InvalidConfig, "resumed adapter kind does not match the method");
  }
  state_.emplace(std::move(resume));
}

void CilRunner::check_schedule() {
  schedule_.validate(cfg_.allow_overlap);
  if (cfg_.head != HeadKind::lda && cfg_.head != HeadKind::ncm) {
    throw Error(ErrorCode::InvalidConfig, "incremental runs support lda and ncm heads only");
  }
  if (train_.empty() || test_.empty()) throw Error(ErrorCode::InsufficientData, "train and test sets must be non-empty");
  require_same_dim(train_.dim(), test_.dim(), "train vs test embedding dimension");
  for (Eigen::Index i = 0; i < train_.size(); ++i) train_by_class_[train_.labels[static_cast<std::size_t>(i)]].push_back(i);
  for (Eigen::Index i = 0; i < test_.size(); ++i) test_by_class_[test_.labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto id : schedule_.all_classes()) {
    if (!train_by_class_.contains(id)) {
      throw Error(ErrorCode::ScheduleClassMissing, "class " + std::to_string(id) + " has no training examples");
    }
    if (!test_by_class_.contains(id)) {
      throw Error(ErrorCode::ScheduleClassMissing, "class " + std::to_string(id) + " has no test examples");
    }
  }
}

void CilRunner::warn(const std::string& msg) const {
  if (cfg_.warn) {
    cfg_.warn(msg);
  } else {
    std::cerr << "warning: " << msg << '\n';
  }
}

std::vector<Eigen::Index> CilRunner::session_indices(std::size_t session) const {
  const Session& spec = schedule_.sessions.at(session);
  std::vector<Eigen::Index> out;
  for (const auto id : spec.class_ids) {
    const auto& pool = train_by_class_.at(id);
    if (!spec.shots || *spec.shots == pool.size()) {
      out.insert(out.end(), pool.begin(), pool.end());
      continue;
    }
    if (*spec.shots > pool.size()) {
      warn("class " + std::to_string(id) + " has " + std::to_string(pool.size()) + " examples, fewer than " +
           std::to_string(*spec.shots) + " shots; taking all");
      out.insert(out.end(), pool.begin(), pool.end());
      continue;
    }
    // Seeded per (seed, class, repeat).
    std::uint32_t repeat = 0;
    for (std::size_t s = 0; s < session; ++s) {
      const auto& ids = schedule_.sessions[s].class_ids;
      repeat += static_cast<std::uint32_t>(std::count(ids.begin(), ids.end(), id));
    }
    std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32), id, repeat};
    std::mt19937_64 rng(seq);
    std::vector<Eigen::Index> shuffled(pool);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    out.insert(out.end(), shuffled.begin(), shuffled.begin() + *spec.shots);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClassifierHead CilRunner::current_head() const {
  if (state_->stats.num_classes() == 0) throw Error(ErrorCode::EmptyClass, "no session has been run yet");
  if (cfg_.head == HeadKind::ncm) return build_ncm(state_->stats);
  return build_lda(state_->stats, finalize(state_->moments, cfg_.regularizer));
}

SessionReport CilRunner::run_next_session() {
  if (finished()) throw Error(ErrorCode::InvalidConfig, "all sessions already ran");
  CilState& st = *state_;
  const std::size_t s = st.sessions_completed;
  const Dataset batch = train_.subset(session_indices(s));

  // The adapter is trained once, on session 1, and frozen afterwards.
  if (s == 0 && cfg_.method != Method::na) {
    TrainTrace trace;
    st.adapter = first_session_adapt(batch, adapter_kind_for(cfg_.method), cfg_.adapter_config(), &trace);
    adapter_loss_ = std::move(trace.epoch_loss);
  }

  const Matrixd adapted = st.adapter.apply_columns(batch.features);
  st.moments.accumulate_columns(adapted);
  st.stats.update(adapted, batch.labels);
  const ClassifierHead head = current_head();

  std::vector<Eigen::Index> eval;
  for (const auto id : head.class_ids) {
    const auto& idx = test_by_class_.at(id);
    eval.insert(eval.end(), idx.begin(), idx.end());
  }
  std::sort(eval.begin(), eval.end());

  std::atomic<std::size_t> correct{0};
  parallel_shards(eval.size(), resolve_thread_count(cfg_.threads), [&](std::size_t begin, std::size_t end, unsigned) {
    std::size_t local = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = eval[i];
      if (predict(head, st.adapter.apply(test_.features.col(col))) == test_.labels[static_cast<std::size_t>(col)]) {
        ++local;
      }
    }
    correct += local;
  });

  SessionReport report;
  report.session = s + 1;
  report.seen_classes = head.class_ids.size();
  report.cumulative_test_size = eval.size();
  report.top1 = 100.0 * static_cast<double>(correct.load()) / static_cast<double>(eval.size());
  st.accuracy_history.push_back(report.top1);
  ++st.sessions_completed;
  return report;
}

RunResult drive(CilRunner& runner, const RunConfig& cfg, const std::function<void(const CilState&)>& after_session) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.method = to_string(cfg.method);
  result.seed = cfg.seed;
  while (!runner.finished()) {
    result.sessions.push_back(runner.run_next_session());
    if (after_session) after_session(runner.state());
  }
  result.per_session_accuracy = runner.state().accuracy_history;
  const double first = result.per_session_accuracy.front();
  result.ppdr = first > 0.0 ? ppdr(first, result.per_session_accuracy.back()) : std::nan("");
  result.final_head = runner.current_head();
  result.adapter = runner.state().adapter;
  result.adapter_loss_curve = runner.adapter_loss_curve();
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_cil(const Dataset& train, const Dataset& test, const SessionSchedule& schedule, const RunConfig& cfg) {
  CilRunner runner(train, test, schedule, cfg);
  return drive(runner, cfg);
}

RunResult run_offline(const Dataset& train, const Dataset& test, const RunConfig& cfg) {
  SessionSchedule single{{Session{train.classes(), std::nullopt}}};
  return run_cil(train, test, single, cfg);
}

void save_state(const std::filesystem::path& dir, const CilState& state) {
  std::filesystem::create_directories(dir);
  save_adapter(dir / "adapter.adp", state.adapter);
  save_moments(dir / "moments.mom", state.moments);
  save_class_stats(dir / "stats.cst", state.stats);
  std::ofstream out(dir / "progress.json");
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "progress.json").string());
  out << nlohmann::json{{"sessions_completed", state.sessions_completed},
                        {"accuracy_history", state.accuracy_history}}
             .dump()
      << '\n';
}

CilState load_state(const std::filesystem::path& dir) {
  std::ifstream in(dir / "progress.json");
  if (!in) throw Error(ErrorCode::Io, "cannot open " + (dir / "progress.json").string());
  nlohmann::json progress;
  try {
    in >> progress;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed progress.json: ") + e.what());
  }
  return CilState{load_adapter(dir / "adapter.adp"), load_moments(dir / "moments.mom"),
                  load_class_stats(dir / "stats.cst"), progress.at("sessions_completed").get<std::size_t>(),
                  progress.at("accuracy_history").get<std::vector<double>>()};
}

}  // namespace cil
