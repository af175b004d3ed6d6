#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pll/candidates.hpp"

namespace pll::eval {

double accuracy(std::span<const int> preds, std::span<const int> labels);

// Per-class accuracy; classes absent from `labels` get NaN.
std::vector<double> per_class_accuracy(std::span<const int> preds, std::span<const int> labels,
                                       std::size_t num_classes);

struct ShotThresholds {
  std::size_t many = 100;  // count > many
  std::size_t few = 20;    // count < few
};

struct ShotAccuracy {
  std::optional<double> many;
  std::optional<double> medium;
  std::optional<double> few;
};

enum class Shot { Many, Medium, Few };
Shot shot_of(std::size_t train_count, ShotThresholds t = {});

// Mean of per-class accuracy within each bucket; empty buckets stay unset.
ShotAccuracy shot_accuracy(std::span<const int> preds, std::span<const int> labels,
                           std::span<const std::size_t> train_class_counts,
                           ShotThresholds t = {});

struct CoverOracle {
  double covering_rate = 0.0;
  std::optional<double> oracle_accuracy;
};

CoverOracle covering_oracle(std::span<const int> preds, const CandidateMatrix& candidates,
                            const std::vector<int>* oracle_labels = nullptr);

struct MetricBlock {
  double overall_acc = 0.0;
  std::optional<double> many_acc;
  std::optional<double> medium_acc;
  std::optional<double> few_acc;
  std::optional<double> covering_rate;
  std::optional<double> oracle_acc;
  std::vector<double> per_class;  // may be empty

  // Flat key=value text; absent metrics are written as "unavailable".
  std::string to_text() const;
  // "class,accuracy" CSV of per_class.
  std::string per_class_csv() const;
};

MetricBlock evaluate(std::span<const int> preds, std::span<const int> labels,
                     std::size_t num_classes,
                     std::span<const std::size_t> train_class_counts = {},
                     const CandidateMatrix* candidates = nullptr);

}  // namespace pll::eval
