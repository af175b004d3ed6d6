#include "pll/optim.hpp"

#include <cmath>
#include <string>

#include "pll/error.hpp"

namespace pll::optim {

void sgd_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
              SgdState& state, const SgdConfig& cfg, std::span<const bool> decay) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: one gradient per parameter tensor required");
  if (!decay.empty() && decay.size() != params.size()) throw ShapeError("sgd_step: decay mask size mismatch");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].size() != grads[p].size()) {
      throw ShapeError("sgd_step: tensor " + std::to_string(p) + " has mismatched gradient size");
    }
    for (double g : grads[p]) {
      if (!std::isfinite(g)) throw NumericalError("non-finite gradient in tensor " + std::to_string(p));
    }
  }
  if (state.velocity.size() != params.size()) {
    state.velocity.assign(params.size(), {});
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& v = state.velocity[p];
    if (v.size() != params[p].size()) v.assign(params[p].size(), 0.0);
    const double wd = (decay.empty() || decay[p]) ? cfg.weight_decay : 0.0;
    auto theta = params[p];
    const auto g = grads[p];
    for (std::size_t q = 0; q < theta.size(); ++q) {
      v[q] = cfg.momentum * v[q] + g[q] + wd * theta[q];
      theta[q] -= cfg.lr * v[q];
    }
  }
}

}  // namespace pll::optim
