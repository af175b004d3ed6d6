#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pll/matrix.hpp"

namespace pll::model {

inline constexpr double kDefaultScale = 25.0;

/// sigma * cos(w_j, f) per class, no bias.
struct CosineClassifier {
  MatrixD weights;  // K x d
  double sigma = kDefaultScale;

  std::size_t num_classes() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }
};

// W_j = t_j / |t_j|. Throws ConfigError on a zero or non-finite row.
CosineClassifier init_text_classifier(const MatrixF& text_feats, double sigma = kDefaultScale);
CosineClassifier init_random_classifier(std::size_t num_classes, std::size_t dim,
                                        std::uint64_t seed, double sigma = kDefaultScale);

/// Residual bottleneck f + s * W_up relu(W_down f). W_up starts at zero.
struct FeatureAdapter {
  MatrixD down;  // r x d
  MatrixD up;    // d x r
  double scale = 0.1;

  std::size_t bottleneck() const noexcept { return down.rows(); }
};

// clamp(2^floor(log2(K/2)), 4, d/2)
std::size_t default_bottleneck(std::size_t num_classes, std::size_t dim);
FeatureAdapter init_adapter(std::size_t dim, std::size_t bottleneck, std::uint64_t seed,
                            double scale = 0.1);

MatrixD adapter_forward(const FeatureAdapter& adapter, const MatrixD& features);

struct Model {
  CosineClassifier head;
  std::optional<FeatureAdapter> adapter;

  std::size_t num_classes() const noexcept { return head.num_classes(); }
  std::size_t dim() const noexcept { return head.dim(); }
};

struct ForwardCache {
  MatrixD input;      // B x d
  MatrixD hidden;     // B x r pre-activation (adapter only)
  MatrixD adapted;    // B x d classifier input
  std::vector<double> input_norms;  // |adapted_b|
  std::vector<double> weight_norms; // |W_j|
  MatrixD logits;     // B x K
};

// Throws NumericalError on a zero-norm feature or weight row.
ForwardCache forward(const Model& m, const MatrixD& features);
MatrixD logits(const Model& m, const MatrixD& features);
MatrixD logits(const Model& m, const MatrixF& features);

// Classifier input (adapter output, or the features themselves).
MatrixD embed(const Model& m, const MatrixD& features);
// Logits of the cosine head alone for one already-embedded vector.
std::vector<double> head_logits(const CosineClassifier& head, std::span<const double> embedded);

struct Gradients {
  MatrixD head;
  MatrixD adapter_down;
  MatrixD adapter_up;
};

Gradients zero_gradients(const Model& m);

// Accumulates d(loss)/d(params) for upstream d(loss)/d(logits) into `into`.
void backward(const Model& m, const ForwardCache& cache, const MatrixD& grad_logits,
              Gradients& into);

// Gradient w.r.t. the input features; used by finite-difference checks.
MatrixD backward_input(const Model& m, const ForwardCache& cache, const MatrixD& grad_logits);

std::vector<int> predict(const Model& m, const MatrixF& features);

// Checkpoint layout (little-endian): "PLLM" u32 K u32 d u8 has_adapter f32 sigma,
// then W (K x d f32, row-major), then when has_adapter: u32 r f32 s,
// W_down (r x d f32), W_up (d x r f32).
std::vector<std::uint8_t> encode_checkpoint(const Model& m);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Model& m, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace pll::model
