#include "pll/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "pll/error.hpp"
#include "pll/io.hpp"
#include "pll/random.hpp"

namespace pll::model {
namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_dim(const Model& m, const MatrixD& features) {
  if (features.cols() != m.dim()) {
    throw ShapeError("features have d=" + std::to_string(features.cols()) + " but the model expects d=" +
                     std::to_string(m.dim()));
  }
}

}  // namespace

CosineClassifier init_text_classifier(const MatrixF& text_feats, double sigma) {
  CosineClassifier c;
  c.sigma = sigma;
  c.weights = MatrixD(text_feats.rows(), text_feats.cols());
  for (std::size_t j = 0; j < text_feats.rows(); ++j) {
    double s = 0.0;
    for (float v : text_feats.row(j)) s += static_cast<double>(v) * v;
    const double n = std::sqrt(s);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw ConfigError("text embedding row " + std::to_string(j) + " is zero or non-finite");
    }
    auto w = c.weights.row(j);
    const auto t = text_feats.row(j);
    for (std::size_t q = 0; q < w.size(); ++q) w[q] = t[q] / n;
  }
  return c;
}

CosineClassifier init_random_classifier(std::size_t num_classes, std::size_t dim, std::uint64_t seed,
                                        double sigma) {
  CosineClassifier c;
  c.sigma = sigma;
  c.weights = MatrixD(num_classes, dim);
  Rng rng(derive_seed(seed, 0x484541));
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : c.weights.flat()) v = scale * rng.normal();
  return c;
}

std::size_t default_bottleneck(std::size_t num_classes, std::size_t dim) {
  const double half = static_cast<double>(num_classes) / 2.0;
  std::size_t r = half >= 1.0 ? std::size_t{1} << static_cast<unsigned>(std::floor(std::log2(half))) : 1;
  const std::size_t hi = std::max<std::size_t>(1, dim / 2);
  return std::clamp<std::size_t>(r, std::min<std::size_t>(4, hi), hi);
}

FeatureAdapter init_adapter(std::size_t dim, std::size_t bottleneck, std::uint64_t seed, double scale) {
  FeatureAdapter a;
  a.scale = scale;
  a.down = MatrixD(bottleneck, dim);
  a.up = MatrixD(dim, bottleneck, 0.0);
  Rng rng(derive_seed(seed, 0x414441));
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  for (auto& v : a.down.flat()) v = s * rng.normal();
  return a;
}

namespace {

void adapter_apply(const FeatureAdapter& a, const MatrixD& x, MatrixD& hidden, MatrixD& out) {
  const std::size_t b = x.rows();
  const std::size_t d = x.cols();
  const std::size_t r = a.bottleneck();
  hidden = MatrixD(b, r);
  out = x;
  for (std::size_t i = 0; i < b; ++i) {
    const auto xi = x.row(i);
    auto h = hidden.row(i);
    for (std::size_t u = 0; u < r; ++u) {
      const auto w = a.down.row(u);
      double acc = 0.0;
      for (std::size_t t = 0; t < d; ++t) acc += w[t] * xi[t];
      h[u] = acc;
    }
    auto o = out.row(i);
    for (std::size_t t = 0; t < d; ++t) {
      const auto w = a.up.row(t);
      double acc = 0.0;
      for (std::size_t u = 0; u < r; ++u) acc += w[u] * std::max(h[u], 0.0);
      o[t] += a.scale * acc;
    }
  }
}

}  // namespace

MatrixD adapter_forward(const FeatureAdapter& adapter, const MatrixD& features) {
  if (features.cols() != adapter.down.cols()) throw ShapeError("adapter input dimension mismatch");
  MatrixD hidden, out;
  adapter_apply(adapter, features, hidden, out);
  return out;
}

MatrixD embed(const Model& m, const MatrixD& features) {
  check_dim(m, features);
  return m.adapter ? adapter_forward(*m.adapter, features) : features;
}

std::vector<double> head_logits(const CosineClassifier& head, std::span<const double> embedded) {
  const double fn = norm(embedded);
  if (!(fn > 0.0)) throw NumericalError("zero-norm classifier input");
  std::vector<double> z(head.num_classes());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const auto w = head.weights.row(j);
    const double wn = norm(w);
    if (!(wn > 0.0)) throw NumericalError("zero-norm classifier weight row " + std::to_string(j));
    double dot = 0.0;
    for (std::size_t t = 0; t < w.size(); ++t) dot += w[t] * embedded[t];
    z[j] = head.sigma * dot / (wn * fn);
  }
  return z;
}

ForwardCache forward(const Model& m, const MatrixD& features) {
  check_dim(m, features);
  ForwardCache c;
  c.input = features;
  if (m.adapter) {
    adapter_apply(*m.adapter, features, c.hidden, c.adapted);
  } else {
    c.adapted = features;
  }
  const std::size_t b = features.rows();
  const std::size_t k = m.num_classes();
  const std::size_t d = m.dim();
  c.weight_norms.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    c.weight_norms[j] = norm(m.head.weights.row(j));
    if (!(c.weight_norms[j] > 0.0) || !std::isfinite(c.weight_norms[j])) {
      throw NumericalError("classifier weight row " + std::to_string(j) + " has zero or non-finite norm");
    }
  }
  c.input_norms.resize(b);
  c.logits = MatrixD(b, k);
  for (std::size_t i = 0; i < b; ++i) {
    const auto f = c.adapted.row(i);
    c.input_norms[i] = norm(f);
    if (!(c.input_norms[i] > 0.0) || !std::isfinite(c.input_norms[i])) {
      throw NumericalError("feature row " + std::to_string(i) + " has zero or non-finite norm");
    }
    for (std::size_t j = 0; j < k; ++j) {
      const auto w = m.head.weights.row(j);
      double dot = 0.0;
      for (std::size_t t = 0; t < d; ++t) dot += w[t] * f[t];
      c.logits(i, j) = m.head.sigma * dot / (c.weight_norms[j] * c.input_norms[i]);
    }
  }
  return c;
}

MatrixD logits(const Model& m, const MatrixD& features) { return forward(m, features).logits; }

MatrixD logits(const Model& m, const MatrixF& features) {
  return forward(m, matrix_cast<double>(features)).logits;
}

Gradients zero_gradients(const Model& m) {
  Gradients g;
  g.head = MatrixD(m.head.weights.rows(), m.head.weights.cols(), 0.0);
  if (m.adapter) {
    g.adapter_down = MatrixD(m.adapter->down.rows(), m.adapter->down.cols(), 0.0);
    g.adapter_up = MatrixD(m.adapter->up.rows(), m.adapter->up.cols(), 0.0);
  }
  return g;
}

namespace {

// d(loss)/d(adapted features), accumulating head gradients when `head_grad` is set.
MatrixD backward_head(const Model& m, const ForwardCache& c, const MatrixD& grad_logits, MatrixD* head_grad) {
  const std::size_t b = c.adapted.rows();
  const std::size_t k = m.num_classes();
  const std::size_t d = m.dim();
  const double sigma = m.head.sigma;
  MatrixD grad_f(b, d, 0.0);
  std::vector<double> v(d), dv(d);
  for (std::size_t i = 0; i < b; ++i) {
    const auto f = c.adapted.row(i);
    const double fn = c.input_norms[i];
    for (std::size_t t = 0; t < d; ++t) v[t] = f[t] / fn;
    std::fill(dv.begin(), dv.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double gj = grad_logits(i, j);
      if (gj == 0.0) continue;
      const auto w = m.head.weights.row(j);
      const double wn = c.weight_norms[j];
      // logit = sigma * u.v with u = w/|w|, v = f/|f|
      const double cosine = c.logits(i, j) / sigma;
      for (std::size_t t = 0; t < d; ++t) dv[t] += sigma * gj * w[t] / wn;
      if (head_grad) {
        auto hg = head_grad->row(j);
        for (std::size_t t = 0; t < d; ++t) hg[t] += sigma * gj * (v[t] - cosine * w[t] / wn) / wn;
      }
    }
    // project out the radial component of dv and scale by 1/|f|
    double radial = 0.0;
    for (std::size_t t = 0; t < d; ++t) radial += dv[t] * v[t];
    auto gf = grad_f.row(i);
    for (std::size_t t = 0; t < d; ++t) gf[t] = (dv[t] - radial * v[t]) / fn;
  }
  return grad_f;
}

}  // namespace

void backward(const Model& m, const ForwardCache& cache, const MatrixD& grad_logits, Gradients& into) {
  const auto grad_f = backward_head(m, cache, grad_logits, &into.head);
  if (!m.adapter) return;
  const auto& a = *m.adapter;
  const std::size_t b = cache.input.rows();
  const std::size_t d = m.dim();
  const std::size_t r = a.bottleneck();
  std::vector<double> dh(r);
  for (std::size_t i = 0; i < b; ++i) {
    const auto gf = grad_f.row(i);
    const auto h = cache.hidden.row(i);
    const auto x = cache.input.row(i);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t t = 0; t < d; ++t) {
      const double gt = a.scale * gf[t];
      if (gt == 0.0) continue;
      auto gu = into.adapter_up.row(t);
      const auto wu = a.up.row(t);
      for (std::size_t u = 0; u < r; ++u) {
        gu[u] += gt * std::max(h[u], 0.0);
        dh[u] += gt * wu[u];
      }
    }
    for (std::size_t u = 0; u < r; ++u) {
      if (h[u] <= 0.0) continue;
      auto gd = into.adapter_down.row(u);
      for (std::size_t t = 0; t < d; ++t) gd[t] += dh[u] * x[t];
    }
  }
}

MatrixD backward_input(const Model& m, const ForwardCache& cache, const MatrixD& grad_logits) {
  auto grad_f = backward_head(m, cache, grad_logits, nullptr);
  if (!m.adapter) return grad_f;
  const auto& a = *m.adapter;
  const std::size_t b = cache.input.rows();
  const std::size_t d = m.dim();
  const std::size_t r = a.bottleneck();
  MatrixD grad_x = grad_f;
  std::vector<double> dh(r);
  for (std::size_t i = 0; i < b; ++i) {
    const auto gf = grad_f.row(i);
    const auto h = cache.hidden.row(i);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t t = 0; t < d; ++t) {
      const auto wu = a.up.row(t);
      for (std::size_t u = 0; u < r; ++u) dh[u] += a.scale * gf[t] * wu[u];
    }
    auto gx = grad_x.row(i);
    for (std::size_t u = 0; u < r; ++u) {
      if (h[u] <= 0.0) continue;
      const auto wd = a.down.row(u);
      for (std::size_t t = 0; t < d; ++t) gx[t] += dh[u] * wd[t];
    }
  }
  return grad_x;
}

std::vector<int> predict(const Model& m, const MatrixF& features) {
  const auto z = logits(m, features);
  std::vector<int> out(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const auto r = z.row(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const Model& m) {
  io::ByteWriter w;
  w.magic("PLLM");
  w.u32(static_cast<std::uint32_t>(m.num_classes()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  w.u8(m.adapter ? 1 : 0);
  w.f32(static_cast<float>(m.head.sigma));
  for (double v : m.head.weights.flat()) w.f32(static_cast<float>(v));
  if (m.adapter) {
    w.u32(static_cast<std::uint32_t>(m.adapter->bottleneck()));
    w.f32(static_cast<float>(m.adapter->scale));
    for (double v : m.adapter->down.flat()) w.f32(static_cast<float>(v));
    for (double v : m.adapter->up.flat()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "PLLM");
  r.require(17, "header");
  r.expect_magic("PLLM");
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  const std::uint8_t has_adapter = r.u8();
  if (has_adapter > 1) throw FormatError("PLLM: has_adapter must be 0 or 1");
  Model m;
  m.head.sigma = r.f32();
  r.require(k * d * 4, "classifier weights");
  m.head.weights = MatrixD(k, d);
  for (auto& v : m.head.weights.flat()) v = r.f32();
  if (has_adapter) {
    r.require(8, "adapter header");
    const std::size_t rank = r.u32();
    FeatureAdapter a;
    a.scale = r.f32();
    r.require(2 * rank * d * 4, "adapter weights");
    a.down = MatrixD(rank, d);
    a.up = MatrixD(d, rank);
    for (auto& v : a.down.flat()) v = r.f32();
    for (auto& v : a.up.flat()) v = r.f32();
    m.adapter = std::move(a);
  }
  if (r.remaining() != 0) {
    throw FormatError("PLLM: " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return m;
}

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  io::write_file_bytes(encode_checkpoint(m), path);
}

Model load_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(io::read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace pll::model
