#include "pll/synthetic.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pll/error.hpp"
#include "pll/random.hpp"

namespace pll::synthetic {

MatrixF blob_means(const BlobSpec& spec) {
  const std::size_t k = spec.num_classes;
  const std::size_t d = spec.dim;
  if (k == 0 || d == 0) throw ConfigError("blobs need K >= 1 and d >= 1");
  if (k > d) throw ConfigError("equidistant blob means need K <= d");

  Rng rng(derive_seed(spec.seed, 0x4D45414E));
  MatrixD basis(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    auto v = basis.row(c);
    double norm = 0.0;
    // Re-draw in the (measure-zero) event Gram-Schmidt leaves nothing.
    while (norm < 1e-6) {
      for (auto& x : v) x = rng.normal();
      for (std::size_t p = 0; p < c; ++p) {
        const auto u = basis.row(p);
        double dot = 0.0;
        for (std::size_t t = 0; t < d; ++t) dot += u[t] * v[t];
        for (std::size_t t = 0; t < d; ++t) v[t] -= dot * u[t];
      }
      norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
    }
    for (auto& x : v) x /= norm;
  }

  const double radius = spec.separation * spec.noise / std::sqrt(2.0);
  MatrixF means(k, d);
  for (std::size_t q = 0; q < means.size(); ++q) {
    means.flat()[q] = static_cast<float>(radius * basis.flat()[q]);
  }
  return means;
}

Blobs make_blobs(const BlobSpec& spec, std::uint64_t sample_seed) {
  Blobs out;
  out.class_means = blob_means(spec);
  const std::size_t n = spec.num_classes * spec.per_class;
  out.features = MatrixF(n, spec.dim);
  out.labels.resize(n);

  Rng rng(derive_seed(spec.seed, 0x534D504C, sample_seed));
  const auto order = rng.permutation(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = order[s];
    const auto c = s / spec.per_class;
    out.labels[i] = static_cast<int>(c);
    const auto mean = out.class_means.row(c);
    auto row = out.features.row(i);
    for (std::size_t t = 0; t < spec.dim; ++t) {
      row[t] = static_cast<float>(mean[t] + spec.noise * rng.normal());
    }
  }
  return out;
}

MatrixF text_embeddings(const MatrixF& class_means, double angle, std::uint64_t seed) {
  const std::size_t k = class_means.rows();
  const std::size_t d = class_means.cols();
  if (d < 2) throw ConfigError("text embeddings need d >= 2");
  Rng rng(derive_seed(seed, 0x54455854));
  MatrixF out(k, d);
  std::vector<double> m(d), r(d);
  for (std::size_t c = 0; c < k; ++c) {
    double mn = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      m[t] = class_means(c, t);
      mn += m[t] * m[t];
    }
    mn = std::sqrt(mn);
    if (mn == 0.0) throw NumericalError("class mean " + std::to_string(c) + " has zero norm");
    for (auto& x : m) x /= mn;
    double rn = 0.0;
    while (rn < 1e-6) {
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        r[t] = rng.normal();
        dot += r[t] * m[t];
      }
      rn = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        r[t] -= dot * m[t];
        rn += r[t] * r[t];
      }
      rn = std::sqrt(rn);
    }
    for (std::size_t t = 0; t < d; ++t) {
      out(c, t) = static_cast<float>(std::cos(angle) * m[t] + std::sin(angle) * r[t] / rn);
    }
  }
  return out;
}

}  // namespace pll::synthetic
