#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cil/adapter.hpp"
#include "cil/heads.hpp"
#include "cil/moments.hpp"
#include "cil/schedule.hpp"

namespace cil {

enum class Method { na, fsa_full, fsa_film };

const char* to_string(Method method);
Method parse_method(const std::string& name);
AdapterKind adapter_kind_for(Method method);

struct RunConfig {
  Method method = Method::na;
  HeadKind head = HeadKind::lda;  // lda or ncm
  std::optional<TrainConfig> adapter_train;  // defaults follow the adapter kind
  std::uint64_t seed = 0;
  double regularizer = 1.0;
  bool allow_overlap = false;
  unsigned threads = 0;  // 0: $CIL_THREADS or 1
  std::function<void(const std::string&)> warn;  // defaults to stderr

  TrainConfig adapter_config() const;
};

struct SessionReport {
  std::size_t session = 0;  // 1-based
  std::size_t seen_classes = 0;
  double top1 = 0.0;  // percent
  std::size_t cumulative_test_size = 0;

  friend bool operator==(const SessionReport&, const SessionReport&) = default;
};

/// Everything that survives between sessions. No raw embeddings.
struct CilState {
  AdapterParams adapter;
  RunningMomentsd moments;
  ClassStats stats;
  std::size_t sessions_completed = 0;
  std::vector<double> accuracy_history;

  friend bool operator==(const CilState&, const CilState&) = default;
};

void save_state(const std::filesystem::path& dir, const CilState& state);
CilState load_state(const std::filesystem::path& dir);

struct RunResult {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<SessionReport> sessions;
  std::vector<double> per_session_accuracy;
  double ppdr = 0.0;
  double wall_time = 0.0;  // seconds
  ClassifierHead final_head;
  AdapterParams adapter = AdapterParams::identity(1);
  std::vector<double> adapter_loss_curve;
};

// Equality on every deterministic field (everything but wall_time).
bool same_outcome(const RunResult& a, const RunResult& b);

/// 100 * (first - last) / first. Negative values mean backward transfer.
double ppdr(double acc_first, double acc_last);

/// Drives one class-incremental run session by session. The train and test
/// sets act as the data source only; the runner carries no embeddings across
/// sessions beyond what CilState holds.
class CilRunner {
 public:
  CilRunner(const Dataset& train, const Dataset& test, SessionSchedule schedule, RunConfig cfg);
  CilRunner(const Dataset& train, const Dataset& test, SessionSchedule schedule, RunConfig cfg, CilState resume);

  bool finished() const { return state_->sessions_completed == schedule_.size(); }
  const CilState& state() const { return *state_; }
  const SessionSchedule& schedule() const { return schedule_; }

  SessionReport run_next_session();
  ClassifierHead current_head() const;
  const std::vector<double>& adapter_loss_curve() const { return adapter_loss_; }

  // Training indices drawn for a session: per class, a seeded uniform sample without replacement.
  std::vector<Eigen::Index> session_indices(std::size_t session) const;

 private:
  void check_schedule();
  void warn(const std::string& msg) const;

  const Dataset& train_;
  const Dataset& test_;
  SessionSchedule schedule_;
  RunConfig cfg_;
  std::map<std::uint32_t, std::vector<Eigen::Index>> train_by_class_;
  std::map<std::uint32_t, std::vector<Eigen::Index>> test_by_class_;
  std::optional<CilState> state_;
  std::vector<double> adapter_loss_;
};

/// Runs the remaining sessions of `runner`. `sessions` holds reports for the
/// sessions run by this call; `per_session_accuracy` covers the whole run,
/// including sessions completed before a resume.
RunResult drive(CilRunner& runner, const RunConfig& cfg,
                const std::function<void(const CilState&)>& after_session = {});

RunResult run_cil(const Dataset& train, const Dataset& test, const SessionSchedule& schedule, const RunConfig& cfg);

/// Single-session ceiling: every class of the train set at once, evaluated on the full test set.
RunResult run_offline(const Dataset& train, const Dataset& test, const RunConfig& cfg);

}  // namespace cil
