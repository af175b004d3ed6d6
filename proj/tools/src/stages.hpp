#pragma once

#include <iosfwd>

#include "config.hpp"

namespace pll::cli {

// File names written into the output directory.
inline constexpr const char* kGenFeatures = "features.pllf";
inline constexpr const char* kGenLabels = "labels.plly";
inline constexpr const char* kGenCandidates = "candidates.pllc";
inline constexpr const char* kFiltered = "filtered.pllc";
inline constexpr const char* kModel = "model.pllm";
inline constexpr const char* kAdjustment = "adjustment.pllf";
inline constexpr const char* kTrainReport = "train_report.txt";
inline constexpr const char* kReport = "report.txt";
inline constexpr const char* kPerClass = "per_class.csv";

// Each stage reads what earlier stages left in the output directory (falling
// back to the configured input paths), writes its own outputs, and appends a
// manifest line. Progress goes to `log`.
void stage_gen(const ExperimentConfig& cfg, std::ostream& log);
void stage_filter(const ExperimentConfig& cfg, std::ostream& log);
void stage_train(const ExperimentConfig& cfg, std::ostream& log);
void stage_eval(const ExperimentConfig& cfg, std::ostream& log);

// Clears previous outputs and manifest, then runs gen (if configured), filter
// (if configured), train, and eval (if a test split is configured).
void stage_pipeline(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace pll::cli
