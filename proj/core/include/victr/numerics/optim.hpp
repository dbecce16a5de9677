#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "victr/numerics/tensor.hpp"

namespace victr {

struct AdamWConfig {
  double lr_max = 1e-3;
  double lr_min = 1e-6;
  std::size_t total_steps = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimizerState {
  AdamWConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step_count = 0;
};

/// One trainable tensor with its gradient. `decay` selects whether decoupled
/// weight decay applies (matrices yes; biases, norms and scalars usually no).
struct ParamRef {
  Tensor* value;
  const Tensor* grad;
  bool decay = true;
};

/// lr_min + (lr_max - lr_min)(1 + cos(pi step / total)) / 2, no warmup.
/// Throws RangeError unless 0 <= step <= total_steps.
double cosine_lr(std::size_t step, std::size_t total_steps, double lr_max, double lr_min);

OptimizerState make_optimizer_state(std::span<const ParamRef> params, const AdamWConfig& config);

/// AdamW: decoupled decay p <- p (1 - lr wd), then the bias-corrected Adam
/// update, with lr = cosine_lr(step_count, total_steps, ...). Increments
/// step_count. Throws ShapeError on mismatched shapes and RangeError once the
/// schedule is exhausted.
void adam_step(std::span<const ParamRef> params, OptimizerState& state);

}  // namespace victr
