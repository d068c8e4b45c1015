#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cil/linalg.hpp"

namespace cil {

// How per-target minima collapse to one number.
enum class Reduction { mean, median, min };

Reduction parse_reduction(const std::string& name);
const char* to_string(Reduction r);

struct SimilarityReport {
  std::vector<double> per_target_min;  // in target order
  double summary = 0.0;
  Reduction reduction = Reduction::mean;
  std::size_t target_size = 0;
  std::size_t reference_size = 0;
};

/// For every target vector, the smallest cosine distance to any reference
/// vector (exhaustive scan), plus a summary over those minima.
SimilarityReport min_cosine_distance(const std::vector<Vectord>& target, const std::vector<Vectord>& reference,
                                     Reduction reduction = Reduction::mean, unsigned threads = 0);

// Linear interpolation between closest ranks, q in [0, 1].
double quantile(std::vector<double> values, double q);

// {summary, quantiles: {p50, p90}, sizes: {target, reference}, reduction}
nlohmann::json to_json(const SimilarityReport& report);

}  // namespace cil
