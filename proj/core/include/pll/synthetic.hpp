#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pll/matrix.hpp"

namespace pll::synthetic {

struct BlobSpec {
  std::size_t num_classes = 10;
  std::size_t dim = 64;
  std::size_t per_class = 500;
  // Distance between any two class means, in units of the per-coordinate noise sigma.
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

struct Blobs {
  MatrixF features;        // N x d, rows grouped by nothing (shuffled)
  std::vector<int> labels;
  MatrixF class_means;     // K x d
};

// Class means are sigma*separation/sqrt(2) times orthonormal directions, so every
// pair of means sits exactly `separation` noise units apart.
MatrixF blob_means(const BlobSpec& spec);

// Draws per_class samples around each mean. `sample_seed` selects the draw; the
// means depend only on spec.seed so train and test splits share geometry.
Blobs make_blobs(const BlobSpec& spec, std::uint64_t sample_seed);

// Stand-in for prompt embeddings: unit class-mean directions rotated by `angle`
// radians towards a random orthogonal direction. Larger angles give a weaker
// zero-shot prior.
MatrixF text_embeddings(const MatrixF& class_means, double angle, std::uint64_t seed);

}  // namespace pll::synthetic
