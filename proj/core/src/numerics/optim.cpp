#include "victr/numerics/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "victr/errors.hpp"

namespace victr {

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max, double lr_min) {
  if (total_steps == 0 || step > total_steps) {
    throw RangeError("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                     std::to_string(total_steps) + "]");
  }
  const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

OptimizerState make_optimizer_state(std::span<const ParamRef> params, const AdamWConfig& config) {
  OptimizerState state{config, {}, {}, 0};
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.value->shape(), 0.0);
    state.second_moment.emplace_back(p.value->shape(), 0.0);
  }
  return state;
}

void adam_step(std::span<const ParamRef> params, OptimizerState& state) {
  const auto& cfg = state.config;
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: parameter count differs from optimizer state");
  }
  if (state.step_count >= cfg.total_steps) {
    throw RangeError("adam_step: schedule exhausted after " + std::to_string(cfg.total_steps) +
                     " steps");
  }
  const double lr = cosine_lr(state.step_count, cfg.total_steps, cfg.lr_max, cfg.lr_min);
  const double t = static_cast<double>(state.step_count + 1);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i].value;
    const Tensor& g = *params[i].grad;
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    if (g.shape() != p.shape() || m.shape() != p.shape()) {
      throw ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
    const double decay = params[i].decay ? cfg.weight_decay : 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      p[j] *= 1.0 - lr * decay;
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  ++state.step_count;
}

}  // namespace victr
