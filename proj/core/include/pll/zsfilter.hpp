#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/dataset.hpp"

namespace pll::zsfilter {

inline constexpr double kDefaultTemperature = 0.01;

// Softmax over cosine similarities to each text embedding, divided by temperature.
// Throws NumericalError on zero-norm rows, ShapeError on dimension mismatch.
ConfidenceMatrix zeroshot_confidence(const FeatureMatrix& image_feats,
                                     const FeatureMatrix& text_feats,
                                     double temperature = kDefaultTemperature);

enum class EmptyFallback { KeepArgmaxInS };

struct FilterSpec {
  std::size_t k = 0;
  EmptyFallback fallback = EmptyFallback::KeepArgmaxInS;

  static FilterSpec defaults(std::size_t num_classes) { return {num_classes / 2}; }
};

// Indices of the k largest confidences; ties go to the smaller class index.
std::vector<int> top_k(std::span<const float> conf, std::size_t k);

struct FilterResult {
  CandidateMatrix candidates;
  std::size_t fallback_rows = 0;
};

/// Keeps S_i ∩ top_k(z_i). A row whose intersection is empty keeps the single
/// most confident member of S_i instead.
FilterResult filter_topk(const CandidateMatrix& candidates, const ConfidenceMatrix& conf,
                         const FilterSpec& spec);

struct SizeStats {
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
  std::optional<double> coverage;  // fraction of rows containing the oracle label
};

SizeStats candidate_stats(const CandidateMatrix& candidates,
                          const std::vector<int>* oracle_labels = nullptr);

}  // namespace pll::zsfilter
