#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "victr/numerics/tensor.hpp"

namespace victr::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  [[nodiscard]] const Tensor& value() const;
  [[nodiscard]] const Tensor& grad() const;
  [[nodiscard]] const Shape& shape() const { return value().shape(); }
  [[nodiscard]] std::size_t rows() const { return value().rows(); }
  [[nodiscard]] std::size_t cols() const { return value().cols(); }
  [[nodiscard]] bool requires_grad() const;
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] std::uint32_t id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so reverse
/// insertion order is a valid topological order for backpropagation.
///
/// A tape is confined to one thread. Independent tapes may run concurrently.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::uint32_t self)>;

  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  // Records an op result. `backward` must read grad(self) and accumulate into
  // its inputs through accumulate().
  Var record(Tensor value, bool requires_grad, Backward backward);

  [[nodiscard]] const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  [[nodiscard]] const Tensor& grad(std::uint32_t id) const;
  [[nodiscard]] bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

  // Adds `delta` into the gradient of `id` (no-op for non-differentiable nodes).
  void accumulate(std::uint32_t id, const Tensor& delta);
  // Mutable gradient buffer, allocated on first use.
  Tensor& grad_buffer(std::uint32_t id);

  // Seeds d(output)/d(output) = 1 for a 1x1 output and runs all backward
  // closures in reverse order.
  void backward(Var output);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

/// Disjoint sets of row indices. Row-grouped ops (attention, mean pooling)
/// treat each group as an independent sequence.
using RowGroups = std::vector<std::vector<std::size_t>>;

// Elementwise / linear algebra. Rank-2 operands throughout.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row_bias(Var x, Var bias);      // bias: 1 x C or C x 1, broadcast over rows
Var linear(Var x, Var weight, Var bias);  // x W + b, weight in x out
Var mul_const(Var x, double c);
Var scale_by(Var x, Var scalar);         // scalar: 1x1
Var sigmoid(Var x);
Var gelu(Var x);                         // tanh approximation
Var reshape(Var x, Shape shape);

Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

// Row-pair reductions: a, b are R x C; result R x 1.
Var row_dot(Var a, Var b);
// Cosine per row pair. Throws ZeroNormError if a row norm is <= norm_floor.
Var row_cosine(Var a, Var b, double norm_floor = 1e-8);
// x: R x C, s: R x 1 -> each row of x scaled by s[r].
Var row_scale(Var x, Var s);

Var gather_rows(Var x, std::vector<std::size_t> index);
Var concat_rows(std::span<const Var> parts);
Var group_mean(Var x, const RowGroups& groups);
Var mean_rows(Var x);  // R x C -> 1 x C
Var sum_all(Var x);    // -> 1x1
Var mean_all(Var x);   // -> 1x1

/// Scaled dot-product attention core. q, k, v are R x D with D divisible by
/// `heads`; every group attends only within itself. Rows outside all groups
/// produce zeros.
Var grouped_attention(Var q, Var k, Var v, const RowGroups& groups, std::size_t heads);

// Losses, returning 1x1.
Var softmax_cross_entropy(Var logits, std::size_t label);
Var sigmoid_bce_mean(Var logits, const std::vector<double>& targets);

}  // namespace victr::ad
