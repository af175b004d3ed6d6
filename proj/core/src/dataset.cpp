#include "pll/dataset.hpp"

#include <cmath>
#include <set>

#include "pll/error.hpp"

namespace pll {

void LabelSpace::validate() const {
  if (num_classes < 2) throw ConfigError("label space needs K >= 2, got " + std::to_string(num_classes));
  if (class_names.empty()) return;
  if (class_names.size() != num_classes) {
    throw ConfigError("expected " + std::to_string(num_classes) + " class names, got " +
                      std::to_string(class_names.size()));
  }
  std::set<std::string> seen;
  for (const auto& n : class_names) {
    if (n.empty()) throw ConfigError("empty class name");
    if (!seen.insert(n).second) throw ConfigError("duplicate class name '" + n + "'");
  }
}

ConfidenceMatrix::ConfidenceMatrix(MatrixF rows) : m_(std::move(rows)) {
  for (std::size_t i = 0; i < m_.rows(); ++i) {
    double sum = 0.0;
    for (float v : m_.row(i)) {
      if (!std::isfinite(v) || v < 0.0f) {
        throw ConfigError("confidence row " + std::to_string(i) + " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ConfigError("confidence row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

std::vector<std::size_t> count_labels(const std::vector<int>& labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < num_classes) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

PLLDataset PLLDataset::make(FeatureMatrix features, CandidateMatrix candidates,
                            std::optional<std::vector<int>> labels, std::size_t num_classes) {
  PLLDataset ds;
  ds.space.num_classes = num_classes;
  ds.features = std::move(features);
  ds.candidates = std::move(candidates);
  ds.oracle_labels = std::move(labels);
  if (ds.oracle_labels) ds.class_counts = count_labels(*ds.oracle_labels, num_classes);
  return ds;
}

PLLDataset PLLDataset::select(std::span<const std::size_t> idx) const {
  PLLDataset out;
  out.space = space;
  const std::size_t d = features.cols();
  out.features = FeatureMatrix(idx.size(), d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto src = features.row(idx[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
  }
  out.candidates = candidates.select_rows(idx);
  if (oracle_labels) {
    std::vector<int> labels(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) labels[r] = (*oracle_labels)[idx[r]];
    out.class_counts = count_labels(labels, space.num_classes);
    out.oracle_labels = std::move(labels);
  } else {
    out.class_counts = class_counts;
  }
  return out;
}

ValidationReport validate_dataset(const PLLDataset& ds) {
  ValidationReport rep;
  const std::size_t k = ds.space.num_classes;
  rep.shape_mismatch = ds.features.rows() != ds.candidates.rows() || ds.candidates.classes() != k;

  for (std::size_t i = 0; i < ds.candidates.rows(); ++i) {
    if (ds.candidates.row_size(i) == 0) ++rep.empty_row_count;
  }
  for (std::size_t i = 0; i < ds.features.rows(); ++i) {
    for (float v : ds.features.row(i)) {
      if (!std::isfinite(v)) {
        ++rep.nonfinite_row_count;
        break;
      }
    }
  }

  if (ds.oracle_labels) {
    const auto& labels = *ds.oracle_labels;
    std::vector<std::size_t> counts(k, 0);
    std::size_t covered = 0;
    const std::size_t rows = std::min(labels.size(), ds.candidates.rows());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const int y = labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= k) {
        ++rep.label_out_of_range_count;
        continue;
      }
      ++counts[static_cast<std::size_t>(y)];
      if (i < rows && static_cast<std::size_t>(y) < ds.candidates.classes() &&
          ds.candidates.test(i, static_cast<std::size_t>(y))) {
        ++covered;
      }
    }
    if (labels.size() != ds.features.rows()) rep.shape_mismatch = true;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t recorded = j < ds.class_counts.size() ? ds.class_counts[j] : 0;
      if (recorded != counts[j]) ++rep.class_count_mismatch;
    }
    rep.uncovered_count = labels.size() - covered;
    rep.covered_fraction =
        labels.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(labels.size());
  }
  return rep;
}

}  // namespace pll
