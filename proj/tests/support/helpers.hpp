#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pll/candidates.hpp"
#include "pll/matrix.hpp"
#include "pll/random.hpp"

namespace pll::testing {

inline MatrixD random_logits(Rng& rng, std::size_t b, std::size_t k, double scale = 1.5) {
  MatrixD z(b, k);
  for (auto& v : z.flat()) v = scale * rng.normal();
  return z;
}

// Non-empty random candidate rows; each label joins with probability `density`.
inline CandidateMatrix random_sets(Rng& rng, std::size_t b, std::size_t k, double density = 0.5) {
  CandidateMatrix c(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (rng.bernoulli(density)) c.set(i, j);
    }
    if (c.row_size(i) == 0) c.set(i, rng.below(k));
  }
  return c;
}

inline CandidateMatrix singleton_sets(const std::vector<int>& labels, std::size_t k) {
  CandidateMatrix c(labels.size(), k);
  for (std::size_t i = 0; i < labels.size(); ++i) c.set(i, static_cast<std::size_t>(labels[i]));
  return c;
}

// Central differences of a scalar function of a matrix argument.
template <class F>
MatrixD numeric_grad(F&& f, const MatrixD& x, double h = 1e-4) {
  MatrixD g(x.rows(), x.cols());
  MatrixD probe = x;
  for (std::size_t t = 0; t < x.flat().size(); ++t) {
    const double orig = probe.flat()[t];
    probe.flat()[t] = orig + h;
    const double up = f(probe);
    probe.flat()[t] = orig - h;
    const double down = f(probe);
    probe.flat()[t] = orig;
    g.flat()[t] = (up - down) / (2.0 * h);
  }
  return g;
}

// max|a-b| / max(max|a|, max|b|, 1e-8)
inline double rel_error(const MatrixD& a, const MatrixD& b) {
  double diff = 0.0;
  double scale = 1e-8;
  for (std::size_t t = 0; t < a.flat().size(); ++t) {
    diff = std::max(diff, std::abs(a.flat()[t] - b.flat()[t]));
    scale = std::max({scale, std::abs(a.flat()[t]), std::abs(b.flat()[t])});
  }
  return diff / scale;
}

// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pll_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pll::testing
