#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cil/harness.hpp"

namespace cil {

// One JSON object per session, {session, seen_classes, top1, cumulative_test_size},
// followed by a footer {method, seed, ppdr, final_top1}. Values are full precision.
void write_run_report(std::ostream& out, const RunResult& result);

struct ParsedRun {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<double> top1;
  std::optional<double> ppdr;
  double final_top1 = 0.0;
};

ParsedRun parse_run_report(std::istream& in);

struct MethodSummary {
  std::string method;
  std::size_t runs = 0;
  std::vector<double> mean_top1;  // per session, averaged over runs
  double mean_final_top1 = 0.0;
  double mean_ppdr = 0.0;
  std::optional<double> diff_vs_na;  // mean final accuracy minus NA's, when NA is present
};

// Groups runs by method, in first-appearance order.
std::vector<MethodSummary> aggregate_runs(const std::vector<ParsedRun>& runs);

// "method  last-session top1 (ppdr)  diff vs NA", one decimal.
std::string summary_table(const std::vector<MethodSummary>& summaries);
// session,<method>,<method>,... with one row per session.
std::string accuracy_csv(const std::vector<MethodSummary>& summaries);

}  // namespace cil
