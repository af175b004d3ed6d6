#include "pll/zsfilter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pll/error.hpp"
#include "pll/parallel.hpp"

namespace pll::zsfilter {
namespace {

std::vector<double> row_norms(const FeatureMatrix& m, const char* what) {
  std::vector<double> norms(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (float v : m.row(i)) s += static_cast<double>(v) * v;
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
      throw NumericalError(std::string(what) + " row " + std::to_string(i) + " is a zero vector");
    }
  }
  return norms;
}

}  // namespace

ConfidenceMatrix zeroshot_confidence(const FeatureMatrix& image_feats,
                                     const FeatureMatrix& text_feats, double temperature) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (image_feats.cols() != text_feats.cols()) {
    throw ShapeError("image features have d=" + std::to_string(image_feats.cols()) +
                     " but text features have d=" + std::to_string(text_feats.cols()));
  }
  const auto img_norm = row_norms(image_feats, "image feature");
  const auto txt_norm = row_norms(text_feats, "text feature");
  const std::size_t n = image_feats.rows();
  const std::size_t k = text_feats.rows();
  const std::size_t d = image_feats.cols();

  MatrixF out(n, k);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(k);
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = image_feats.row(i);
      for (std::size_t c = 0; c < k; ++c) {
        const auto t = text_feats.row(c);
        double dot = 0.0;
        for (std::size_t q = 0; q < d; ++q) dot += static_cast<double>(x[q]) * t[q];
        z[c] = dot / (img_norm[i] * txt_norm[c]) / temperature;
      }
      const double mx = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (auto& v : z) {
        v = std::exp(v - mx);
        sum += v;
      }
      auto row = out.row(i);
      for (std::size_t c = 0; c < k; ++c) row[c] = static_cast<float>(z[c] / sum);
    }
  });
  return ConfidenceMatrix(std::move(out));
}

std::vector<int> top_k(std::span<const float> conf, std::size_t k) {
  std::vector<int> idx(conf.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](int a, int b) {
    const auto ca = conf[static_cast<std::size_t>(a)];
    const auto cb = conf[static_cast<std::size_t>(b)];
    return ca > cb || (ca == cb && a < b);
  });
  idx.resize(k);
  return idx;
}

FilterResult filter_topk(const CandidateMatrix& candidates, const ConfidenceMatrix& conf,
                         const FilterSpec& spec) {
  if (spec.k < 1) throw ConfigError("filter.k must be at least 1");
  if (candidates.rows() != conf.rows() || candidates.classes() != conf.classes()) {
    throw ShapeError("candidates are " + std::to_string(candidates.rows()) + "x" +
                     std::to_string(candidates.classes()) + " but confidences are " +
                     std::to_string(conf.rows()) + "x" + std::to_string(conf.classes()));
  }
  const std::size_t n = candidates.rows();
  const std::size_t k = candidates.classes();
  FilterResult res{CandidateMatrix(n, k), 0};
  std::vector<char> fell_back(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto z = conf.row(i);
      bool any = false;
      for (int j : top_k(z, spec.k)) {
        if (candidates.test(i, static_cast<std::size_t>(j))) {
          res.candidates.set(i, static_cast<std::size_t>(j));
          any = true;
        }
      }
      if (any) continue;
      // Most confident member of S_i; smaller index wins ties.
      std::size_t best = k;
      for (std::size_t j = 0; j < k; ++j) {
        if (candidates.test(i, j) && (best == k || z[j] > z[best])) best = j;
      }
      if (best < k) res.candidates.set(i, best);
      fell_back[i] = 1;
    }
  });
  res.fallback_rows = static_cast<std::size_t>(std::count(fell_back.begin(), fell_back.end(), 1));
  return res;
}

SizeStats candidate_stats(const CandidateMatrix& candidates, const std::vector<int>* oracle_labels) {
  SizeStats s;
  const std::size_t n = candidates.rows();
  if (n == 0) return s;
  s.min = candidates.classes();
  double total = 0.0;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t sz = candidates.row_size(i);
    total += static_cast<double>(sz);
    s.min = std::min(s.min, sz);
    s.max = std::max(s.max, sz);
    if (oracle_labels && i < oracle_labels->size()) {
      const int y = (*oracle_labels)[i];
      if (y >= 0 && static_cast<std::size_t>(y) < candidates.classes() &&
          candidates.test(i, static_cast<std::size_t>(y))) {
        ++covered;
      }
    }
  }
  s.mean = total / static_cast<double>(n);
  if (oracle_labels) s.coverage = static_cast<double>(covered) / static_cast<double>(n);
  return s;
}

}  // namespace pll::zsfilter
