#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/matrix.hpp"

namespace pll {

struct LabelSpace {
  std::size_t num_classes = 0;
  std::vector<std::string> class_names;  // empty, or exactly num_classes entries

  // Throws ConfigError when K < 2 or class names are missing, empty, or duplicated.
  void validate() const;
};

// N x d frozen embeddings, one row per instance.
using FeatureMatrix = MatrixF;

/// Per-instance class confidences; every row lies on the probability simplex.
class ConfidenceMatrix {
public:
  static constexpr double kRowSumTolerance = 1e-5;

  ConfidenceMatrix() = default;
  // Throws ConfigError when a row is negative, non-finite, or does not sum to 1.
  explicit ConfidenceMatrix(MatrixF rows);

  std::size_t rows() const noexcept { return m_.rows(); }
  std::size_t classes() const noexcept { return m_.cols(); }
  std::span<const float> row(std::size_t i) const { return m_.row(i); }
  const MatrixF& matrix() const noexcept { return m_; }

private:
  MatrixF m_;
};

struct PLLDataset {
  LabelSpace space;
  FeatureMatrix features;
  CandidateMatrix candidates;
  std::optional<std::vector<int>> oracle_labels;
  std::vector<std::size_t> class_counts;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t num_classes() const noexcept { return space.num_classes; }

  bool covered(std::size_t i) const {
    return oracle_labels && candidates.test(i, static_cast<std::size_t>((*oracle_labels)[i]));
  }

  // Assembles a dataset, deriving class_counts from the labels when present.
  static PLLDataset make(FeatureMatrix features, CandidateMatrix candidates,
                         std::optional<std::vector<int>> labels, std::size_t num_classes);

  // Subset of rows in the given order; class_counts recomputed from labels.
  PLLDataset select(std::span<const std::size_t> idx) const;
};

std::vector<std::size_t> count_labels(const std::vector<int>& labels, std::size_t num_classes);

struct ValidationReport {
  bool shape_mismatch = false;          // features.N != candidates.N or candidates.K != K
  std::size_t empty_row_count = 0;
  std::size_t nonfinite_row_count = 0;
  std::size_t label_out_of_range_count = 0;
  std::size_t class_count_mismatch = 0;  // classes whose recorded count disagrees with the labels
  std::size_t uncovered_count = 0;
  std::optional<double> covered_fraction;

  bool well_formed() const noexcept {
    return !shape_mismatch && empty_row_count == 0 && nonfinite_row_count == 0 &&
           label_out_of_range_count == 0 && class_count_mismatch == 0;
  }
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

// Diagnostic only; never throws on content.
ValidationReport validate_dataset(const PLLDataset& ds);

}  // namespace pll
