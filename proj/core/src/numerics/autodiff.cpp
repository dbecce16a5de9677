#include "victr/numerics/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "victr/errors.hpp"

namespace victr::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  return record(std::move(value), requires_grad, nullptr);
}

Var Tape::record(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, std::move(backward)});
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& Tape::grad(std::uint32_t id) const { return nodes_[id].grad; }

Tensor& Tape::grad_buffer(std::uint32_t id) {
  auto& node = nodes_[id];
  if (node.grad.empty() && !node.value.empty()) node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

void Tape::accumulate(std::uint32_t id, const Tensor& delta) {
  if (!nodes_[id].requires_grad) return;
  auto& g = grad_buffer(id);
  if (g.size() != delta.size()) throw ShapeError("gradient shape mismatch");
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Tape::backward(Var output) {
  if (output.tape() != this) throw ShapeError("backward on a foreign tape");
  if (output.value().size() != 1) throw ShapeError("backward requires a scalar output");
  for (auto& n : nodes_) n.grad = Tensor{};
  grad_buffer(output.id())[0] = 1.0;
  for (std::uint32_t i = output.id() + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (!node.requires_grad || !node.backward || node.grad.empty()) continue;
    node.backward(*this, i);
  }
}

namespace {

Tape& same_tape(Var a, Var b) {
  if (a.tape() != b.tape()) throw ShapeError("operands live on different tapes");
  return *a.tape();
}

// Gradient buffer of node `id`, or nullptr when it needs no gradient.
double* grad_of(Tape& tape, std::uint32_t id) {
  if (!tape.requires_grad(id)) return nullptr;
  return tape.grad_buffer(id).values().data();
}

// The backward closure is only materialised when a gradient is needed, so
// value-only evaluation (finite differences, inference) skips its allocation.
template <class F>
Var finish(Tape& tape, Tensor value, bool requires_grad, F&& backward, const char* op) {
  value.check_finite(op);
  if (!requires_grad) return tape.record(std::move(value), false, nullptr);
  return tape.record(std::move(value), true, Tape::Backward(std::forward<F>(backward)));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " +
                                      shape_to_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2(A, "matmul");
  require_rank2(B, "matmul");
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    throw ShapeError("matmul: inner extents differ " + shape_to_string(A.shape()) + " x " +
                     shape_to_string(B.shape()));
  }
  Tensor C({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* c = &C(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A(i, p);
      const double* brow = &B(p, 0);
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  const auto ia = a.id(), ib = b.id();
  return finish(
      tape, std::move(C), a.requires_grad() || b.requires_grad(),
      [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        if (double* dA = grad_of(t, ia)) {
          for (std::size_t i = 0; i < m; ++i) {
            const double* g = &G(i, 0);
            for (std::size_t p = 0; p < k; ++p) {
              const double* brow = &B(p, 0);
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += g[j] * brow[j];
              dA[i * k + p] += acc;
            }
          }
        }
        if (double* dB = grad_of(t, ib)) {
          for (std::size_t i = 0; i < m; ++i) {
            const double* g = &G(i, 0);
            for (std::size_t p = 0; p < k; ++p) {
              const double av = A(i, p);
              double* drow = dB + p * n;
              for (std::size_t j = 0; j < n; ++j) drow[j] += av * g[j];
            }
          }
        }
      },
      "matmul");
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return finish(
      tape, std::move(out), a.requires_grad() || b.requires_grad(),
      [ia, ib](Tape& t, std::uint32_t self) {
        t.accumulate(ia, t.grad(self));
        t.accumulate(ib, t.grad(self));
      },
      "add");
}

Var sub(Var a, Var b) { return add(a, mul_const(b, -1.0)); }

Var add_row_bias(Var x, Var bias) {
  Tape& tape = same_tape(x, bias);
  const Tensor& X = x.value();
  require_rank2(X, "add_row_bias");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (bias.value().size() != cols) throw ShapeError("add_row_bias: bias length mismatch");
  Tensor out = X;
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) += b[c];
  }
  const auto ix = x.id(), ib = bias.id();
  return finish(
      tape, std::move(out), x.requires_grad() || bias.requires_grad(),
      [ix, ib, rows, cols](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        t.accumulate(ix, G);
        if (double* db = grad_of(t, ib)) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) db[c] += G(r, c);
          }
        }
      },
      "add_row_bias");
}

Var linear(Var x, Var weight, Var bias) { return add_row_bias(matmul(x, weight), bias); }

Var mul_const(Var x, double c) {
  Tensor out = x.value();
  for (auto& v : out.values()) v *= c;
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix, c](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          for (std::size_t i = 0; i < G.size(); ++i) dx[i] += c * G[i];
        }
      },
      "mul_const");
}

Var scale_by(Var x, Var scalar) {
  Tape& tape = same_tape(x, scalar);
  if (scalar.value().size() != 1) throw ShapeError("scale_by: scalar must be 1x1");
  const double s = scalar.value()[0];
  Tensor out = x.value();
  for (auto& v : out.values()) v *= s;
  const auto ix = x.id(), is = scalar.id();
  return finish(
      tape, std::move(out), x.requires_grad() || scalar.requires_grad(),
      [ix, is](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& X = t.value(ix);
        const double s = t.value(is)[0];
        if (double* dx = grad_of(t, ix)) {
          for (std::size_t i = 0; i < G.size(); ++i) dx[i] += s * G[i];
        }
        if (double* ds = grad_of(t, is)) {
          double acc = 0.0;
          for (std::size_t i = 0; i < G.size(); ++i) acc += G[i] * X[i];
          ds[0] += acc;
        }
      },
      "scale_by");
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) v = sigmoid_scalar(v);
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          const Tensor& Y = t.value(self);
          for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i] * Y[i] * (1.0 - Y[i]);
        }
      },
      "sigmoid");
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var x) {
  Tensor out = x.value();
  for (auto& v : out.values()) {
    const double u = kGeluC * (v + kGeluA * v * v * v);
    v = 0.5 * v * (1.0 + std::tanh(u));
  }
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          const Tensor& X = t.value(ix);
          for (std::size_t i = 0; i < G.size(); ++i) {
            const double v = X[i];
            const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
            const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
            dx[i] += G[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
          }
        }
      },
      "gelu");
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value();
  out.reshape(std::move(shape));
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i];
        }
      },
      "reshape");
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& tape = same_tape(x, gamma);
  same_tape(x, beta);
  const Tensor& X = x.value();
  require_rank2(X, "layer_norm");
  const std::size_t rows = X.rows(), d = X.cols();
  if (d < 2) throw ShapeError("layer_norm: feature extent must be >= 2");
  if (gamma.value().size() != d || beta.value().size() != d) {
    throw ShapeError("layer_norm: gamma/beta length mismatch");
  }
  Tensor out({rows, d});
  std::vector<double> xhat(rows * d);
  std::vector<double> inv_std(rows);
  const Tensor& g = gamma.value();
  const Tensor& b = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += X(r, c);
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (X(r, c) - mean) * (X(r, c) - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (X(r, c) - mean) * inv;
      xhat[r * d + c] = h;
      out(r, c) = g[c] * h + b[c];
    }
  }
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return finish(
      tape, std::move(out),
      x.requires_grad() || gamma.requires_grad() || beta.requires_grad(),
      [ix, ig, ib, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& gam = t.value(ig);
        double* dg = grad_of(t, ig);
        double* db = grad_of(t, ib);
        double* dx = grad_of(t, ix);
        std::vector<double> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_dh = 0.0, mean_dh_h = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            const double gv = G(r, c);
            const double h = xhat[r * d + c];
            if (dg) dg[c] += gv * h;
            if (db) db[c] += gv;
            dh[c] = gv * gam[c];
            mean_dh += dh[c];
            mean_dh_h += dh[c] * h;
          }
          if (!dx) continue;
          mean_dh /= static_cast<double>(d);
          mean_dh_h /= static_cast<double>(d);
          for (std::size_t c = 0; c < d; ++c) {
            dx[r * d + c] += inv_std[r] * (dh[c] - mean_dh - xhat[r * d + c] * mean_dh_h);
          }
        }
      },
      "layer_norm");
}

Var row_dot(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "row_dot");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t rows = A.rows(), cols = A.cols();
  Tensor out({rows, 1});
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += A(r, c) * B(r, c);
    out[r] = acc;
  }
  const auto ia = a.id(), ib = b.id();
  return finish(
      tape, std::move(out), a.requires_grad() || b.requires_grad(),
      [ia, ib, rows, cols](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        double* da = grad_of(t, ia);
        double* db = grad_of(t, ib);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < cols; ++c) {
            if (da) da[r * cols + c] += G[r] * B(r, c);
            if (db) db[r * cols + c] += G[r] * A(r, c);
          }
        }
      },
      "row_dot");
}

Var row_cosine(Var a, Var b, double norm_floor) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "row_cosine");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t rows = A.rows(), cols = A.cols();
  Tensor out({rows, 1});
  std::vector<double> norm_a(rows), norm_b(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dot += A(r, c) * B(r, c);
      na += A(r, c) * A(r, c);
      nb += B(r, c) * B(r, c);
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na <= norm_floor || nb <= norm_floor) {
      throw ZeroNormError("cosine affinity of a vector with norm <= " + std::to_string(norm_floor) +
                          " (row " + std::to_string(r) + ")");
    }
    norm_a[r] = na;
    norm_b[r] = nb;
    out[r] = dot / (na * nb);
  }
  const auto ia = a.id(), ib = b.id();
  return finish(
      tape, std::move(out), a.requires_grad() || b.requires_grad(),
      [ia, ib, rows, cols, norm_a = std::move(norm_a), norm_b = std::move(norm_b)](
          Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& Y = t.value(self);
        const Tensor& A = t.value(ia);
        const Tensor& B = t.value(ib);
        double* da = grad_of(t, ia);
        double* db = grad_of(t, ib);
        for (std::size_t r = 0; r < rows; ++r) {
          const double inv_ab = 1.0 / (norm_a[r] * norm_b[r]);
          const double ca = Y[r] / (norm_a[r] * norm_a[r]);
          const double cb = Y[r] / (norm_b[r] * norm_b[r]);
          for (std::size_t c = 0; c < cols; ++c) {
            if (da) da[r * cols + c] += G[r] * (B(r, c) * inv_ab - ca * A(r, c));
            if (db) db[r * cols + c] += G[r] * (A(r, c) * inv_ab - cb * B(r, c));
          }
        }
      },
      "row_cosine");
}

Var row_scale(Var x, Var s) {
  Tape& tape = same_tape(x, s);
  const Tensor& X = x.value();
  require_rank2(X, "row_scale");
  const std::size_t rows = X.rows(), cols = X.cols();
  if (s.value().size() != rows) throw ShapeError("row_scale: scale length mismatch");
  Tensor out = X;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) *= s.value()[r];
  }
  const auto ix = x.id(), is = s.id();
  return finish(
      tape, std::move(out), x.requires_grad() || s.requires_grad(),
      [ix, is, rows, cols](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& X = t.value(ix);
        const Tensor& S = t.value(is);
        double* dx = grad_of(t, ix);
        double* ds = grad_of(t, is);
        for (std::size_t r = 0; r < rows; ++r) {
          double acc = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            if (dx) dx[r * cols + c] += G(r, c) * S[r];
            acc += G(r, c) * X(r, c);
          }
          if (ds) ds[r] += acc;
        }
      },
      "row_scale");
}

Var gather_rows(Var x, std::vector<std::size_t> index) {
  const Tensor& X = x.value();
  require_rank2(X, "gather_rows");
  const std::size_t cols = X.cols();
  Tensor out({index.size(), cols});
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= X.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(&X(index[i], 0), cols, &out(i, 0));
  }
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix, cols, index = std::move(index)](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          for (std::size_t i = 0; i < index.size(); ++i) {
            double* drow = dx + index[i] * cols;
            for (std::size_t c = 0; c < cols; ++c) drow[c] += G(i, c);
          }
        }
      },
      "gather_rows");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  Tape& tape = *parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  bool needs_grad = false;
  std::vector<std::uint32_t> ids;
  for (const auto& p : parts) {
    same_tape(parts.front(), p);
    require_rank2(p.value(), "concat_rows");
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
    needs_grad = needs_grad || p.requires_grad();
    ids.push_back(p.id());
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const auto& p : parts) {
    values.insert(values.end(), p.value().values().begin(), p.value().values().end());
  }
  return finish(
      tape, Tensor({rows, cols}, std::move(values)), needs_grad,
      [ids = std::move(ids)](Tape& t, std::uint32_t self) {
        const Tensor& G = t.grad(self);
        std::size_t offset = 0;
        for (auto id : ids) {
          const std::size_t n = t.value(id).size();
          if (double* d = grad_of(t, id)) {
            for (std::size_t i = 0; i < n; ++i) d[i] += G[offset + i];
          }
          offset += n;
        }
      },
      "concat_rows");
}

Var group_mean(Var x, const RowGroups& groups) {
  const Tensor& X = x.value();
  require_rank2(X, "group_mean");
  const std::size_t cols = X.cols();
  Tensor out({groups.size(), cols});
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ShapeError("group_mean: empty group");
    const double inv = 1.0 / static_cast<double>(groups[g].size());
    for (auto r : groups[g]) {
      if (r >= X.rows()) throw ShapeError("group_mean: index out of range");
      for (std::size_t c = 0; c < cols; ++c) out(g, c) += X(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) out(g, c) *= inv;
  }
  const auto ix = x.id();
  return finish(
      *x.tape(), std::move(out), x.requires_grad(),
      [ix, cols, groups](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const Tensor& G = t.grad(self);
          for (std::size_t g = 0; g < groups.size(); ++g) {
            const double inv = 1.0 / static_cast<double>(groups[g].size());
            for (auto r : groups[g]) {
              for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += inv * G(g, c);
            }
          }
        }
      },
      "group_mean");
}

Var mean_rows(Var x) {
  RowGroups all(1);
  for (std::size_t r = 0; r < x.rows(); ++r) all[0].push_back(r);
  return group_mean(x, all);
}

Var sum_all(Var x) {
  double acc = 0.0;
  for (double v : x.value().values()) acc += v;
  const auto ix = x.id();
  return finish(
      *x.tape(), Tensor::scalar(acc), x.requires_grad(),
      [ix](Tape& t, std::uint32_t self) {
        if (double* dx = grad_of(t, ix)) {
          const double g = t.grad(self)[0];
          const std::size_t n = t.value(ix).size();
          for (std::size_t i = 0; i < n; ++i) dx[i] += g;
        }
      },
      "sum_all");
}

Var mean_all(Var x) {
  const double n = static_cast<double>(x.value().size());
  return mul_const(sum_all(x), 1.0 / n);
}

Var grouped_attention(Var q, Var k, Var v, const RowGroups& groups, std::size_t heads) {
  Tape& tape = same_tape(q, k);
  same_tape(q, v);
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  require_rank2(Q, "grouped_attention");
  require_same_shape(Q, K, "grouped_attention");
  require_same_shape(Q, V, "grouped_attention");
  const std::size_t d = Q.cols();
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor out({Q.rows(), d}, 0.0);
  // Softmax probabilities per (group, head), row-major s x s.
  std::vector<std::vector<double>> probs;
  probs.reserve(groups.size() * heads);
  std::vector<double> scores;
  for (const auto& group : groups) {
    const std::size_t s = group.size();
    for (auto r : group) {
      if (r >= Q.rows()) throw ShapeError("attention: group index out of range");
    }
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      std::vector<double> p(s * s);
      for (std::size_t i = 0; i < s; ++i) {
        const double* qi = &Q(group[i], off);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < s; ++j) {
          const double* kj = &K(group[j], off);
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * kj[c];
          p[i * s + j] = acc * scale;
          mx = std::max(mx, p[i * s + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
          p[i * s + j] = std::exp(p[i * s + j] - mx);
          z += p[i * s + j];
        }
        double* o = &out(group[i], off);
        for (std::size_t j = 0; j < s; ++j) {
          p[i * s + j] /= z;
          const double* vj = &V(group[j], off);
          for (std::size_t c = 0; c < dh; ++c) o[c] += p[i * s + j] * vj[c];
        }
      }
      probs.push_back(std::move(p));
    }
  }

  const auto iq = q.id(), ik = k.id(), iv = v.id();
  return finish(
      tape, std::move(out), q.requires_grad() || k.requires_grad() || v.requires_grad(),
      [iq, ik, iv, groups, heads, dh, d, scale, probs = std::move(probs)](Tape& t,
                                                                         std::uint32_t self) {
        const Tensor& G = t.grad(self);
        const Tensor& Q = t.value(iq);
        const Tensor& K = t.value(ik);
        const Tensor& V = t.value(iv);
        double* dQ = grad_of(t, iq);
        double* dK = grad_of(t, ik);
        double* dV = grad_of(t, iv);
        std::vector<double> dp;
        std::size_t pi = 0;
        for (const auto& group : groups) {
          const std::size_t s = group.size();
          dp.assign(s * s, 0.0);
          for (std::size_t h = 0; h < heads; ++h, ++pi) {
            const auto& p = probs[pi];
            const std::size_t off = h * dh;
            // dP = dO V^T ; dV += P^T dO
            for (std::size_t i = 0; i < s; ++i) {
              const double* gi = &G(group[i], off);
              for (std::size_t j = 0; j < s; ++j) {
                const double* vj = &V(group[j], off);
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c) acc += gi[c] * vj[c];
                dp[i * s + j] = acc;
                if (dV) {
                  double* dvj = dV + group[j] * d + off;
                  const double pij = p[i * s + j];
                  for (std::size_t c = 0; c < dh; ++c) dvj[c] += pij * gi[c];
                }
              }
            }
            // dS = P * (dP - rowsum(dP * P)), then through the scaled QK^T.
            for (std::size_t i = 0; i < s; ++i) {
              double dot = 0.0;
              for (std::size_t j = 0; j < s; ++j) dot += dp[i * s + j] * p[i * s + j];
              const double* qi = &Q(group[i], off);
              double* dqi = dQ ? dQ + group[i] * d + off : nullptr;
              for (std::size_t j = 0; j < s; ++j) {
                const double ds = p[i * s + j] * (dp[i * s + j] - dot) * scale;
                if (ds == 0.0) continue;
                const double* kj = &K(group[j], off);
                if (dqi) {
                  for (std::size_t c = 0; c < dh; ++c) dqi[c] += ds * kj[c];
                }
                if (dK) {
                  double* dkj = dK + group[j] * d + off;
                  for (std::size_t c = 0; c < dh; ++c) dkj[c] += ds * qi[c];
                }
              }
            }
          }
        }
      },
      "grouped_attention");
}

Var softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& Z = logits.value();
  const std::size_t n = Z.size();
  if (label >= n) {
    throw LabelError("label " + std::to_string(label) + " out of range for " + std::to_string(n) +
                     " classes");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : Z.values()) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : Z.values()) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> prob(n);
  for (std::size_t i = 0; i < n; ++i) prob[i] = std::exp(Z[i] - lse);
  const auto iz = logits.id();
  return finish(
      *logits.tape(), Tensor::scalar(lse - Z[label]), logits.requires_grad(),
      [iz, label, prob = std::move(prob)](Tape& t, std::uint32_t self) {
        if (double* dz = grad_of(t, iz)) {
          const double g = t.grad(self)[0];
          for (std::size_t i = 0; i < prob.size(); ++i) {
            dz[i] += g * (prob[i] - (i == label ? 1.0 : 0.0));
          }
        }
      },
      "softmax_cross_entropy");
}

Var sigmoid_bce_mean(Var logits, const std::vector<double>& targets) {
  const Tensor& Z = logits.value();
  const std::size_t n = Z.size();
  if (targets.size() != n) throw LabelError("multi-label target length mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = Z[i];
    const double y = targets[i];
    if (y != 0.0 && y != 1.0) throw LabelError("multi-label targets must be 0 or 1");
    loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
  }
  const auto iz = logits.id();
  return finish(
      *logits.tape(), Tensor::scalar(loss / static_cast<double>(n)), logits.requires_grad(),
      [iz, targets, n](Tape& t, std::uint32_t self) {
        if (double* dz = grad_of(t, iz)) {
          const double g = t.grad(self)[0] / static_cast<double>(n);
          const Tensor& Z = t.value(iz);
          for (std::size_t i = 0; i < n; ++i) dz[i] += g * (sigmoid_scalar(Z[i]) - targets[i]);
        }
      },
      "sigmoid_bce_mean");
}

}  // namespace victr::ad
