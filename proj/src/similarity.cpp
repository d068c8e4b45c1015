#include "cil/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>

#include "cil/parallel.hpp"

namespace cil {

Reduction parse_reduction(const std::string& name) {
  if (name == "mean") return Reduction::mean;
  if (name == "median") return Reduction::median;
  if (name == "min") return Reduction::min;
  throw Error(ErrorCode::InvalidConfig, "unknown reduction '" + name + "'");
}

const char* to_string(Reduction r) {
  switch (r) {
    case Reduction::mean: return "mean";
    case Reduction::median: return "median";
    case Reduction::min: return "min";
  }
  return "unknown";
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InsufficientData, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SimilarityReport min_cosine_distance(const std::vector<Vectord>& target, const std::vector<Vectord>& reference,
                                     Reduction reduction, unsigned threads) {
  if (target.empty() || reference.empty()) {
    throw Error(ErrorCode::InsufficientData, "similarity needs non-empty target and reference sets");
  }
  const Eigen::Index d = reference.front().size();
  auto squared_norms = [d](const std::vector<Vectord>& set, const char* which) {
    std::vector<double> out;
    out.reserve(set.size());
    for (const auto& v : set) {
      require_same_dim(v.size(), d, which);
      const double n2 = v.dot(v);
      if (!(n2 > 0.0)) throw Error(ErrorCode::ZeroNorm, std::string(which) + " contains a zero vector");
      out.push_back(n2);
    }
    return out;
  };
  const auto ref_norms = squared_norms(reference, "reference");
  const auto tgt_norms = squared_norms(target, "target");

  SimilarityReport report;
  report.reduction = reduction;
  report.target_size = target.size();
  report.reference_size = reference.size();
  report.per_target_min.assign(target.size(), 0.0);
  parallel_shards(target.size(), resolve_thread_count(threads), [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t t = begin; t < end; ++t) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < reference.size(); ++r) {
        const double cos = target[t].dot(reference[r]) / std::sqrt(tgt_norms[t] * ref_norms[r]);
        best = std::min(best, std::clamp(1.0 - cos, 0.0, 2.0));
      }
      report.per_target_min[t] = best;
    }
  });

  const auto& mins = report.per_target_min;
  switch (reduction) {
    case Reduction::mean:
      report.summary = std::accumulate(mins.begin(), mins.end(), 0.0) / static_cast<double>(mins.size());
      break;
    case Reduction::median:
      report.summary = quantile(mins, 0.5);
      break;
    case Reduction::min:
      report.summary = *std::min_element(mins.begin(), mins.end());
      break;
  }
  return report;
}

nlohmann::json to_json(const SimilarityReport& report) {
  return {
      {"summary", report.summary},
      {"reduction", to_string(report.reduction)},
      {"quantiles", {{"p50", quantile(report.per_target_min, 0.5)}, {"p90", quantile(report.per_target_min, 0.9)}}},
      {"sizes", {{"target", report.target_size}, {"reference", report.reference_size}}},
  };
}

}  // namespace cil
