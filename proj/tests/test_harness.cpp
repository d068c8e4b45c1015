#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "cil/harness.hpp"
#include "cil/synthetic.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cil;
using cil::testing::code_of;

namespace {

SyntheticPair small_data(std::uint64_t seed, std::uint32_t classes = 6, std::uint32_t train = 40) {
  SyntheticSpec spec;
  spec.classes = classes;
  spec.dim = 6;
  spec.train_per_class = train;
  spec.test_per_class = 20;
  spec.covariance = CovarianceShape::anisotropic;
  spec.aspect_ratio = 5;
  spec.mean_scale = 2;
  spec.seed = seed;
  return generate_synthetic(spec);
}

SessionSchedule three_sessions(std::optional<std::uint32_t> shots = std::nullopt) {
  return {{{{0, 1}, shots}, {{2, 3}, shots}, {{4, 5}, shots}}};
}

RunConfig quiet(Method method = Method::na) {
  RunConfig cfg;
  cfg.method = method;
  cfg.warn = [](const std::string&) {};
  return cfg;
}

RunConfig short_adapter(Method method) {
  RunConfig cfg = quiet(method);
  TrainConfig t = method == Method::fsa_full ? full_adapter_defaults() : film_adapter_defaults();
  t.epochs = 15;
  t.batch_size = 32;
  cfg.adapter_train = t;
  return cfg;
}

}  // namespace

TEST_CASE("ppdr examples") {
  CHECK(ppdr(80.2, 57.4) == doctest::Approx(28.43).epsilon(1e-4));
  CHECK(ppdr(35.5, 41.0) == doctest::Approx(-15.49).epsilon(1e-3));
  CHECK(ppdr(50.0, 50.0) == 0.0);
  CHECK(code_of([] { ppdr(0.0, 10.0); }) == ErrorCode::ZeroFirstAccuracy);
}

TEST_CASE("method names") {
  CHECK(parse_method("na") == Method::na);
  CHECK(parse_method("fsa") == Method::fsa_full);
  CHECK(parse_method("fsa_film") == Method::fsa_film);
  CHECK(adapter_kind_for(Method::fsa_full) == AdapterKind::full);
  CHECK(code_of([] { parse_method("finetune"); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("a single session has zero forgetting") {
  const auto data = small_data(1);
  const auto r = run_offline(data.train, data.test, quiet());
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.ppdr == 0.0);
  CHECK(r.sessions[0].seen_classes == 6);
  CHECK(r.sessions[0].cumulative_test_size == 120);
}

TEST_CASE("runs are deterministic for a seed and independent of threads") {
  const auto data = small_data(2);
  for (const auto method : {Method::na, Method::fsa_film, Method::fsa_full}) {
    auto cfg = short_adapter(method);
    const auto a = run_cil(data.train, data.test, three_sessions(10u), cfg);
    cfg.threads = 3;
    const auto b = run_cil(data.train, data.test, three_sessions(10u), cfg);
    CHECK(same_outcome(a, b));
  }
}

TEST_CASE("cumulative evaluation covers every seen class") {
  const auto data = small_data(3);
  const auto r = run_cil(data.train, data.test, three_sessions(), quiet());
  REQUIRE(r.sessions.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(r.sessions[s].session == s + 1);
    CHECK(r.sessions[s].seen_classes == 2 * (s + 1));
    CHECK(r.sessions[s].cumulative_test_size == 40 * (s + 1));
  }
  CHECK(r.per_session_accuracy.size() == 3);
  CHECK(r.ppdr == doctest::Approx(ppdr(r.per_session_accuracy[0], r.per_session_accuracy[2])));
}

TEST_CASE("the final NA head equals pooled LDA on all seen data") {
  const auto data = small_data(4);
  const auto r = run_cil(data.train, data.test, three_sessions(), quiet());
  const auto oracle_head = oracle::batch_lda(data.train);
  CHECK(r.final_head.class_ids == oracle_head.class_ids);
  CHECK((r.final_head.weights - oracle_head.weights).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((r.final_head.biases - oracle_head.biases).cwiseAbs().maxCoeff() <= 1e-9);

  auto ncm = quiet();
  ncm.head = HeadKind::ncm;
  const auto n = run_cil(data.train, data.test, three_sessions(), ncm);
  const auto ncm_oracle = oracle::batch_lda(data.train, 1.0, true);
  CHECK((n.final_head.weights - ncm_oracle.weights).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("NA predictions do not depend on session order") {
  const auto data = small_data(5);
  const auto base = run_cil(data.train, data.test, three_sessions(8u), quiet());
  std::vector<std::size_t> perm{0, 1, 2};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 4; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto r = run_cil(data.train, data.test, permute_sessions(three_sessions(8u), perm), quiet());
    CHECK(predict_columns(r.final_head, data.test.features) == predict_columns(base.final_head, data.test.features));
    CHECK(r.per_session_accuracy.back() == base.per_session_accuracy.back());
  }
}

TEST_CASE("FSA adapts on the first session only") {
  const auto data = small_data(6);
  const auto cfg = short_adapter(Method::fsa_film);
  SessionSchedule two{{{{0, 1, 2}, std::nullopt}, {{3, 4, 5}, std::nullopt}}};
  CilRunner runner(data.train, data.test, two, cfg);
  runner.run_next_session();
  const AdapterParams after_first = runner.state().adapter;
  CHECK(after_first.kind() == AdapterKind::film);
  CHECK_FALSE(after_first == AdapterParams::initial(AdapterKind::film, 6));
  CHECK(runner.adapter_loss_curve().size() == 15);
  runner.run_next_session();
  CHECK(runner.state().adapter == after_first);

  // Later sessions do not influence the adapter.
  SessionSchedule other{{{{0, 1, 2}, std::nullopt}, {{5}, std::nullopt}}};
  const auto r = run_cil(data.train, data.test, other, cfg);
  CHECK(r.adapter == after_first);
}

TEST_CASE("resuming from saved state matches an uninterrupted run") {
  const auto data = small_data(7);
  const auto dir = cil::testing::scratch_dir("resume");
  for (const auto method : {Method::na, Method::fsa_film}) {
    const auto cfg = short_adapter(method);
    const auto full = run_cil(data.train, data.test, three_sessions(12u), cfg);

    CilRunner first(data.train, data.test, three_sessions(12u), cfg);
    first.run_next_session();
    save_state(dir, first.state());
    const CilState loaded = load_state(dir);
    CHECK(loaded == first.state());

    CilRunner second(data.train, data.test, three_sessions(12u), cfg, loaded);
    const auto resumed = drive(second, cfg);
    CHECK(resumed.sessions.size() == 2);
    CHECK(resumed.per_session_accuracy == full.per_session_accuracy);
    CHECK(resumed.final_head == full.final_head);
    CHECK(resumed.adapter == full.adapter);
    CHECK(std::memcmp(&resumed.ppdr, &full.ppdr, sizeof(double)) == 0);
  }
}

TEST_CASE("resume rejects state that does not fit") {
  const auto data = small_data(8);
  CilState wrong{AdapterParams::identity(3), RunningMomentsd(3), ClassStats(3), 0, {}};
  CHECK(code_of([&] { CilRunner r(data.train, data.test, three_sessions(), quiet(), wrong); }) ==
        ErrorCode::DimMismatch);
  CilState too_far{AdapterParams::identity(6), RunningMomentsd(6), ClassStats(6), 4, {1, 2, 3, 4}};
  CHECK(code_of([&] { CilRunner r(data.train, data.test, three_sessions(), quiet(), too_far); }) ==
        ErrorCode::InvalidConfig);
}

TEST_CASE("shot sampling") {
  const auto data = small_data(9);
  CilRunner runner(data.train, data.test, three_sessions(5u), quiet());
  const auto idx = runner.session_indices(1);
  CHECK(idx.size() == 10);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  for (const auto i : idx) {
    const auto label = data.train.labels[static_cast<std::size_t>(i)];
    CHECK((label == 2 || label == 3));
  }
  // The draw for a class does not depend on where its session sits.
  const std::vector<std::size_t> perm{1, 0, 2};
  CilRunner swapped(data.train, data.test, permute_sessions(three_sessions(5u), perm), quiet());
  CHECK(swapped.session_indices(0) == idx);

  std::vector<std::string> warnings;
  auto cfg = quiet();
  cfg.warn = [&](const std::string& m) { warnings.push_back(m); };
  CilRunner greedy(data.train, data.test, three_sessions(500u), cfg);
  CHECK(greedy.session_indices(0).size() == 80);
  CHECK(warnings.size() == 2);
}

TEST_CASE("schedule and data mismatches") {
  const auto data = small_data(10);
  SessionSchedule missing{{{{0, 1}, std::nullopt}, {{9}, std::nullopt}}};
  CHECK(code_of([&] { run_cil(data.train, data.test, missing, quiet()); }) == ErrorCode::ScheduleClassMissing);
  const Dataset no_test_for_5 = data.test.subset([&] {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < data.test.size(); ++i)
      if (data.test.labels[static_cast<std::size_t>(i)] != 5) keep.push_back(i);
    return keep;
  }());
  CHECK(code_of([&] { run_cil(data.train, no_test_for_5, three_sessions(), quiet()); }) ==
        ErrorCode::ScheduleClassMissing);
  SessionSchedule overlap{{{{0, 1}, std::nullopt}, {{1, 2}, std::nullopt}}};
  CHECK(code_of([&] { run_cil(data.train, data.test, overlap, quiet()); }) == ErrorCode::InvalidConfig);
  auto allow = quiet();
  allow.allow_overlap = true;
  CHECK_NOTHROW(run_cil(data.train, data.test, overlap, allow));
  auto linear = quiet();
  linear.head = HeadKind::linear;
  CHECK(code_of([&] { run_cil(data.train, data.test, three_sessions(), linear); }) == ErrorCode::InvalidConfig);
}
