#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "victr/numerics/autodiff.hpp"
#include "victr/numerics/tensor.hpp"

namespace victr {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// f builds a scalar (1x1) on the tape from leaves bound to the inputs.
using ScalarFn = std::function<ad::Var(ad::Tape&, std::span<const ad::Var>)>;

/// Compares reverse-mode gradients against central differences,
/// max_i |analytic_i - numeric_i| / max(1, |numeric_i|), over every coordinate
/// of every input.
GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> inputs, double h = 1e-5);

double grad_check(const std::function<ad::Var(ad::Tape&, ad::Var)>& f, const Tensor& x,
                  double h = 1e-5);

}  // namespace victr
