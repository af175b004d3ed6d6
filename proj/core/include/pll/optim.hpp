#pragma once

#include <span>
#include <vector>

namespace pll::optim {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

// One velocity buffer per parameter tensor; zero on first use.
struct SgdState {
  std::vector<std::vector<double>> velocity;
};

/// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
///
/// `decay` selects, per tensor, whether weight decay applies. Throws
/// NumericalError on a non-finite gradient before touching any parameter.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, SgdState& state,
              const SgdConfig& cfg, std::span<const bool> decay = {});

}  // namespace pll::optim
