#include "cil/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

namespace cil {

using nlohmann::json;

void write_run_report(std::ostream& out, const RunResult& result) {
  for (const auto& s : result.sessions) {
    out << json{{"session", s.session},
                {"seen_classes", s.seen_classes},
                {"top1", s.top1},
                {"cumulative_test_size", s.cumulative_test_size}}
               .dump()
        << '\n';
  }
  json footer{{"method", result.method},
              {"seed", result.seed},
              {"final_top1", result.per_session_accuracy.empty() ? 0.0 : result.per_session_accuracy.back()}};
  footer["ppdr"] = std::isfinite(result.ppdr) ? json(result.ppdr) : json(nullptr);
  out << footer.dump() << '\n';
}

ParsedRun parse_run_report(std::istream& in) {
  ParsedRun run;
  bool footer = false;
  std::size_t first_session = 1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      if (obj.contains("method")) {
        run.method = obj.at("method").get<std::string>();
        run.seed = obj.at("seed").get<std::uint64_t>();
        run.final_top1 = obj.at("final_top1").get<double>();
        if (!obj.at("ppdr").is_null()) run.ppdr = obj.at("ppdr").get<double>();
        footer = true;
      } else {
        // A resumed run starts past session 1; numbering must still be consecutive.
        const auto session = obj.at("session").get<std::size_t>();
        if (run.top1.empty()) first_session = session;
        if (session == 0 || session != first_session + run.top1.size()) {
          throw Error(ErrorCode::InvalidConfig, "sessions out of order");
        }
        run.top1.push_back(obj.at("top1").get<double>());
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "run report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!footer) throw Error(ErrorCode::InvalidConfig, "run report has no footer");
  return run;
}

std::vector<MethodSummary> aggregate_runs(const std::vector<ParsedRun>& runs) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::size_t> slot;
  for (const auto& run : runs) {
    auto [it, inserted] = slot.try_emplace(run.method, out.size());
    if (inserted) out.push_back(MethodSummary{run.method, 0, std::vector<double>(run.top1.size(), 0.0), 0.0, 0.0, {}});
    auto& s = out[it->second];
    if (s.mean_top1.size() != run.top1.size()) {
      throw Error(ErrorCode::InvalidConfig, "runs of method " + run.method + " differ in session count");
    }
    for (std::size_t i = 0; i < run.top1.size(); ++i) s.mean_top1[i] += run.top1[i];
    s.mean_final_top1 += run.final_top1;
    s.mean_ppdr += run.ppdr.value_or(std::nan(""));
    ++s.runs;
  }
  for (auto& s : out) {
    const auto n = static_cast<double>(s.runs);
    for (auto& v : s.mean_top1) v /= n;
    s.mean_final_top1 /= n;
    s.mean_ppdr /= n;
  }
  const auto na = std::find_if(out.begin(), out.end(), [](const MethodSummary& s) { return s.method == "na"; });
  if (na != out.end()) {
    const double base = na->mean_final_top1;
    for (auto& s : out) s.diff_vs_na = s.mean_final_top1 - base;
  }
  return out;
}

namespace {

std::string fixed1(double v) {
  if (!std::isfinite(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string summary_table(const std::vector<MethodSummary>& summaries) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %5s  %-18s %s\n", "method", "runs", "last top1 (ppdr)", "diff vs na");
  out << line;
  for (const auto& s : summaries) {
    const std::string cell = fixed1(s.mean_final_top1) + " (" + fixed1(s.mean_ppdr) + ")";
    std::snprintf(line, sizeof(line), "%-12s %5zu  %-18s %s\n", s.method.c_str(), s.runs, cell.c_str(),
                  s.diff_vs_na ? fixed1(*s.diff_vs_na).c_str() : "-");
    out << line;
  }
  return out.str();
}

std::string accuracy_csv(const std::vector<MethodSummary>& summaries) {
  std::ostringstream out;
  out << "session";
  std::size_t sessions = 0;
  for (const auto& s : summaries) {
    out << ',' << s.method;
    sessions = std::max(sessions, s.mean_top1.size());
  }
  out << '\n';
  for (std::size_t i = 0; i < sessions; ++i) {
    out << i + 1;
    for (const auto& s : summaries) {
      out << ',';
      if (i < s.mean_top1.size()) out << fixed1(s.mean_top1[i]);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace cil
