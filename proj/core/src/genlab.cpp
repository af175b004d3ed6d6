#include "pll/genlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pll/error.hpp"
#include "pll/parallel.hpp"
#include "pll/random.hpp"

namespace pll::genlab {
namespace {

// Stream tags keep per-row draws independent across generators sharing a seed.
constexpr std::uint64_t kUssStream = 0x555353;
constexpr std::uint64_t kFpsStream = 0x465053;
constexpr std::uint64_t kLongTailStream = 0x4C54;

void check_labels(std::span<const int> labels, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("candidate generation needs K >= 2");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw ConfigError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                        " outside [0," + std::to_string(num_classes) + ")");
    }
  }
}

}  // namespace

void GenSpec::validate() const {
  if (const auto* f = std::get_if<Fps>(&strategy)) {
    if (!(f->eta > 0.0 && f->eta < 1.0)) {
      throw ConfigError("gen.eta must lie in (0,1), got " + std::to_string(f->eta));
    }
  } else if (const auto* id = std::get_if<InstanceDependent>(&strategy)) {
    if (!(id->top_fraction > 0.0 && id->top_fraction <= 1.0)) {
      throw ConfigError("gen.top_fraction must lie in (0,1], got " + std::to_string(id->top_fraction));
    }
  }
}

CandidateMatrix gen_uss(std::span<const int> labels, std::size_t num_classes, std::uint64_t seed) {
  check_labels(labels, num_classes);
  CandidateMatrix out(labels.size(), num_classes);
  parallel_for(labels.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, i, kUssStream));
      const auto y = static_cast<std::size_t>(labels[i]);
      out.set(i, y);
      for (std::size_t j = 0; j < num_classes; ++j) {
        if (j != y && rng.bernoulli(0.5)) out.set(i, j);
      }
    }
  });
  return out;
}

CandidateMatrix gen_fps(std::span<const int> labels, std::size_t num_classes, double eta,
                        std::uint64_t seed) {
  if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("FPS eta must lie in (0,1), got " + std::to_string(eta));
  check_labels(labels, num_classes);
  CandidateMatrix out(labels.size(), num_classes);
  parallel_for(labels.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, i, kFpsStream));
      const auto y = static_cast<std::size_t>(labels[i]);
      out.set(i, y);
      bool flipped = false;
      for (std::size_t j = 0; j < num_classes; ++j) {
        if (j != y && rng.bernoulli(eta)) {
          out.set(i, j);
          flipped = true;
        }
      }
      if (!flipped) {
        // Uniform over the K-1 false labels.
        std::size_t j = rng.below(num_classes - 1);
        if (j >= y) ++j;
        out.set(i, j);
      }
    }
  });
  return out;
}

std::vector<double> AuxModel::probabilities(std::span<const float> x) const {
  const std::size_t k = weights.rows();
  std::vector<double> z(k);
  for (std::size_t c = 0; c < k; ++c) {
    double acc = bias[c];
    const auto w = weights.row(c);
    for (std::size_t t = 0; t < x.size(); ++t) acc += w[t] * x[t];
    z[c] = acc;
  }
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

AuxModel train_aux_classifier(const FeatureMatrix& features, std::span<const int> labels,
                              std::size_t num_classes, std::size_t epochs, std::uint64_t seed) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (d == 0) throw ConfigError("auxiliary classifier needs feature dimension d >= 1");
  if (n == 0 || labels.size() != n) throw ConfigError("auxiliary classifier needs one label per row");
  check_labels(labels, num_classes);

  constexpr std::size_t kBatch = 64;
  constexpr double kLr = 0.1;
  constexpr double kMomentum = 0.9;

  AuxModel m;
  m.weights = MatrixD(num_classes, d, 0.0);
  m.bias.assign(num_classes, 0.0);
  MatrixD vel_w(num_classes, d, 0.0);
  std::vector<double> vel_b(num_classes, 0.0);
  MatrixD grad_w(num_classes, d);
  std::vector<double> grad_b(num_classes);

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng rng(derive_seed(seed, epoch, 0xA0A0));
    const auto order = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += kBatch) {
      const std::size_t end = std::min(n, start + kBatch);
      grad_w.fill(0.0);
      std::fill(grad_b.begin(), grad_b.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto x = features.row(i);
        auto p = m.probabilities(x);
        p[static_cast<std::size_t>(labels[i])] -= 1.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
          auto g = grad_w.row(c);
          for (std::size_t t = 0; t < d; ++t) g[t] += p[c] * x[t];
          grad_b[c] += p[c];
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t q = 0; q < m.weights.size(); ++q) {
        auto& v = vel_w.flat()[q];
        v = kMomentum * v + grad_w.flat()[q] * inv;
        m.weights.flat()[q] -= kLr * v;
      }
      for (std::size_t c = 0; c < num_classes; ++c) {
        vel_b[c] = kMomentum * vel_b[c] + grad_b[c] * inv;
        m.bias[c] -= kLr * vel_b[c];
      }
    }
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = m.probabilities(features.row(i));
    const auto arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (arg == labels[i]) ++correct;
  }
  m.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return m;
}

std::size_t instance_top_count(std::size_t num_classes, double top_fraction) {
  const double raw = top_fraction * static_cast<double>(num_classes);
  if (!(top_fraction > 0.0 && top_fraction <= 1.0) || raw < 1.0 - 1e-9) {
    throw ConfigError("top_fraction * K must be at least 1 (top_fraction=" +
                      std::to_string(top_fraction) + ", K=" + std::to_string(num_classes) + ")");
  }
  // Guard against 0.1 * 100 = 10.000000000000002 rounding up.
  return std::min(num_classes, static_cast<std::size_t>(std::ceil(raw - 1e-9)));
}

CandidateMatrix gen_instance_dependent(const AuxModel& aux, const FeatureMatrix& features,
                                       std::span<const int> labels, std::size_t num_classes,
                                       double top_fraction) {
  check_labels(labels, num_classes);
  const std::size_t m = instance_top_count(num_classes, top_fraction);
  if (aux.weights.rows() != num_classes || aux.weights.cols() != features.cols()) {
    throw ShapeError("auxiliary model shape does not match features/K");
  }
  CandidateMatrix out(labels.size(), num_classes);
  parallel_for(labels.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> order(num_classes);
    for (std::size_t i = begin; i < end; ++i) {
      const auto p = aux.probabilities(features.row(i));
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                        [&](std::size_t a, std::size_t b) { return p[a] > p[b] || (p[a] == p[b] && a < b); });
      out.set(i, static_cast<std::size_t>(labels[i]));
      for (std::size_t t = 0; t < m; ++t) out.set(i, order[t]);
    }
  });
  return out;
}

CandidateMatrix gen_instance_dependent(const FeatureMatrix& features, std::span<const int> labels,
                                       std::size_t num_classes, double top_fraction,
                                       std::uint64_t seed, std::size_t aux_epochs) {
  instance_top_count(num_classes, top_fraction);
  const auto aux = train_aux_classifier(features, labels, num_classes, aux_epochs, seed);
  return gen_instance_dependent(aux, features, labels, num_classes, top_fraction);
}

CandidateMatrix generate(const GenSpec& spec, const FeatureMatrix& features,
                         std::span<const int> labels, std::size_t num_classes) {
  spec.validate();
  return std::visit(
      [&](const auto& s) -> CandidateMatrix {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Uss>) {
          return gen_uss(labels, num_classes, spec.seed);
        } else if constexpr (std::is_same_v<S, Fps>) {
          return gen_fps(labels, num_classes, s.eta, spec.seed);
        } else {
          return gen_instance_dependent(features, labels, num_classes, s.top_fraction, spec.seed,
                                        s.aux_epochs);
        }
      },
      spec.strategy);
}

std::vector<std::size_t> longtail_counts(std::size_t n_max, double gamma, std::size_t num_classes) {
  if (!(gamma >= 1.0)) throw ConfigError("gamma must be >= 1, got " + std::to_string(gamma));
  if (num_classes < 2) throw ConfigError("long-tail profile needs K >= 2");
  std::vector<std::size_t> counts(num_classes);
  const double span = static_cast<double>(num_classes - 1);
  for (std::size_t j = 0; j < num_classes; ++j) {
    const double exact = static_cast<double>(n_max) * std::pow(gamma, -static_cast<double>(j) / span);
    // The tolerance absorbs pow() rounding on exact integers such as 5000/100.
    counts[j] = static_cast<std::size_t>(std::floor(exact + 1e-9));
  }
  counts[0] = n_max;
  return counts;
}

PLLDataset subsample_longtail(const PLLDataset& dataset, double gamma, std::uint64_t seed) {
  if (!dataset.oracle_labels) throw ConfigError("long-tail subsampling needs oracle labels");
  const std::size_t k = dataset.num_classes();
  const auto& labels = *dataset.oracle_labels;
  const auto have = count_labels(labels, k);

  std::vector<std::size_t> rank(k);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) { return have[a] > have[b]; });
  const std::size_t n_max = have[rank[0]];
  const auto target = longtail_counts(n_max, gamma, k);
  if (target[k - 1] < 1) {
    throw ConfigError("gamma too large: tail class would keep floor(" + std::to_string(n_max) + "/" +
                      std::to_string(gamma) + ") = 0 instances");
  }

  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  std::vector<char> keep(labels.size(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t cls = rank[j];
    auto& pool = by_class[cls];
    const std::size_t take = std::min(target[j], pool.size());
    Rng rng(derive_seed(seed, cls, kLongTailStream));
    for (std::size_t t = 0; t < take; ++t) {
      std::swap(pool[t], pool[t + rng.below(pool.size() - t)]);
      keep[pool[t]] = 1;
    }
  }
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) idx.push_back(i);
  }
  return dataset.select(idx);
}

}  // namespace pll::genlab
