#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/dataset.hpp"
#include "pll/matrix.hpp"

namespace pll::genlab {

// Uniform over all 2^(K-1) subsets of false labels.
struct Uss {};

// Independent flips with probability eta; a row that gains no false label gets one.
struct Fps {
  double eta = 0.3;
};

// True label plus the auxiliary model's top ceil(top_fraction*K) classes.
struct InstanceDependent {
  double top_fraction = 0.1;
  std::size_t aux_epochs = 20;
};

using Strategy = std::variant<Uss, Fps, InstanceDependent>;

struct GenSpec {
  Strategy strategy = Fps{};
  std::uint64_t seed = 0;

  void validate() const;
};

struct LongTailSpec {
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

CandidateMatrix gen_uss(std::span<const int> labels, std::size_t num_classes, std::uint64_t seed);

CandidateMatrix gen_fps(std::span<const int> labels, std::size_t num_classes, double eta,
                        std::uint64_t seed);

/// Linear softmax head (d -> K) used to produce feature-correlated candidates.
struct AuxModel {
  MatrixD weights;  // K x d
  std::vector<double> bias;
  double train_accuracy = 0.0;

  std::vector<double> probabilities(std::span<const float> x) const;
};

AuxModel train_aux_classifier(const FeatureMatrix& features, std::span<const int> labels,
                              std::size_t num_classes, std::size_t epochs, std::uint64_t seed);

// Number of aux-model classes unioned into each row.
std::size_t instance_top_count(std::size_t num_classes, double top_fraction);

CandidateMatrix gen_instance_dependent(const AuxModel& aux, const FeatureMatrix& features,
                                       std::span<const int> labels, std::size_t num_classes,
                                       double top_fraction);

// Convenience overload: trains the auxiliary model first (seeded from `seed`).
CandidateMatrix gen_instance_dependent(const FeatureMatrix& features, std::span<const int> labels,
                                       std::size_t num_classes, double top_fraction,
                                       std::uint64_t seed, std::size_t aux_epochs = 20);

CandidateMatrix generate(const GenSpec& spec, const FeatureMatrix& features,
                         std::span<const int> labels, std::size_t num_classes);

/// Per-rank retained counts floor(n_max * gamma^(-j/(K-1))), j = 0..K-1.
std::vector<std::size_t> longtail_counts(std::size_t n_max, double gamma, std::size_t num_classes);

/// Long-tailed subsample of a balanced labelled dataset.
///
/// Classes are ranked by descending count (ties by index) and the class at
/// rank j keeps longtail_counts(...)[j] uniformly chosen instances. Retained
/// rows keep their original relative order. Throws ConfigError when the
/// tail class would be emptied or gamma < 1.
PLLDataset subsample_longtail(const PLLDataset& dataset, double gamma, std::uint64_t seed);

}  // namespace pll::genlab
