#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pll/dataset.hpp"
#include "pll/model.hpp"
#include "pll/objectives.hpp"
#include "pll/optim.hpp"

namespace pll::trainer {

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  obj::ObjectiveKind objective = obj::Cc{};
  bool use_adapter = false;
  double adapter_scale = 0.1;
  std::size_t adapter_bottleneck = 0;  // 0 selects model::default_bottleneck
  double sigma = model::kDefaultScale;
  // Skip weight decay on the text-initialised head during the first epoch.
  bool protect_init = false;

  void validate() const;
};

struct EvalSplit {
  FeatureMatrix features;
  std::vector<int> labels;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> train_accuracy;  // against oracle labels
  std::optional<double> test_accuracy;
  std::size_t warnings = 0;  // clamped rows and Sinkhorn column drops
};

struct TrainReport {
  std::string objective;
  std::vector<EpochRecord> epochs;

  // key=value lines, one block per epoch.
  std::string to_text() const;
};

struct FitOptions {
  const MatrixF* text_init = nullptr;  // K x d
  const EvalSplit* test = nullptr;
};

struct FitResult {
  model::Model model;
  obj::ObjectiveState state;
  TrainReport report;
  // Logit offsets applied at prediction time (-tau log prior for RECORDS, else empty).
  std::vector<double> logit_adjustment;
};

/// Trains the (optionally adapted) cosine classifier on frozen features.
///
/// Each epoch draws a permutation from derive_seed(seed, epoch), steps SGD over
/// minibatches, and then refreshes epoch-level objective state (PRODEN weights,
/// POP working sets, SoLar class distribution) from full-data predictions.
/// Throws ConfigError on an empty dataset and NumericalError on non-finite gradients.
FitResult fit(const PLLDataset& dataset, const TrainConfig& cfg, const FitOptions& opts = {});

// argmax of logits + adjustment (adjustment may be empty).
std::vector<int> predict(const model::Model& m, const MatrixF& features,
                         const std::vector<double>& logit_adjustment = {});

}  // namespace pll::trainer
