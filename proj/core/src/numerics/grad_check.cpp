#include "victr/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "victr/errors.hpp"

namespace victr {

namespace {

double evaluate(const ScalarFn& f, std::span<const Tensor> inputs) {
  ad::Tape tape;
  std::vector<ad::Var> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(tape.constant(t));
  auto out = f(tape, leaves);
  if (out.value().size() != 1) throw ShapeError("grad_check: function must return a scalar");
  return out.value()[0];
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& f, std::span<const Tensor> inputs, double h) {
  std::vector<Tensor> analytic;
  {
    ad::Tape tape;
    std::vector<ad::Var> leaves;
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    auto out = f(tape, leaves);
    tape.backward(out);
    for (const auto& leaf : leaves) {
      analytic.push_back(leaf.grad().empty() ? Tensor(leaf.shape(), 0.0) : leaf.grad());
    }
  }

  GradCheckReport report;
  std::vector<Tensor> work(inputs.begin(), inputs.end());
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (std::size_t j = 0; j < work[i].size(); ++j) {
      const double orig = work[i][j];
      work[i][j] = orig + h;
      const double plus = evaluate(f, work);
      work[i][j] = orig - h;
      const double minus = evaluate(f, work);
      work[i][j] = orig;
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = std::abs(analytic[i][j] - numeric) / std::max(1.0, std::abs(numeric));
      ++report.coordinates;
      if (err > report.max_rel_error || report.coordinates == 1) {
        report.max_rel_error = err;
        report.worst_input = i;
        report.worst_index = j;
        report.analytic = analytic[i][j];
        report.numeric = numeric;
      }
    }
  }
  return report;
}

double grad_check(const std::function<ad::Var(ad::Tape&, ad::Var)>& f, const Tensor& x, double h) {
  const Tensor inputs[] = {x};
  return grad_check([&](ad::Tape& tape, std::span<const ad::Var> v) { return f(tape, v[0]); },
                    inputs, h)
      .max_rel_error;
}

}  // namespace victr
