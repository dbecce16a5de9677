#include "victr/numerics/nn.hpp"

#include <cmath>

#include "victr/errors.hpp"

namespace victr {

double cosine_affinity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("cosine_affinity: length mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na <= kNormFloor || nb <= kNormFloor) {
    throw ZeroNormError("cosine_affinity: vector norm below 1e-8");
  }
  return dot / (na * nb);
}

ad::Var apply_linear(ad::Var x, const LinearT<ad::Var>& l) {
  return ad::linear(x, l.weight, l.bias);
}

ad::Var apply_norm(ad::Var x, const NormT<ad::Var>& n) {
  return ad::layer_norm(x, n.gamma, n.beta, kLayerNormEps);
}

ad::Var multi_head_self_attention(ad::Var x, const AttentionT<ad::Var>& w, std::size_t heads,
                                  const ad::RowGroups& groups) {
  if (heads == 0 || x.cols() % heads != 0) {
    throw ShapeError("multi_head_self_attention: width " + std::to_string(x.cols()) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  auto q = apply_linear(x, w.query);
  auto k = apply_linear(x, w.key);
  auto v = apply_linear(x, w.value);
  auto mixed = ad::grouped_attention(q, k, v, groups, heads);
  return apply_linear(mixed, w.output);
}

ad::Var multi_head_self_attention(ad::Var x, const AttentionT<ad::Var>& w, std::size_t heads) {
  ad::RowGroups all(1);
  for (std::size_t r = 0; r < x.rows(); ++r) all[0].push_back(r);
  return multi_head_self_attention(x, w, heads, all);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  ad::Tape tape;
  auto out = ad::layer_norm(tape.constant(x), tape.constant(gamma), tape.constant(beta),
                            kLayerNormEps);
  return out.value();
}

Tensor multi_head_self_attention(const Tensor& x, const Attention& w, std::size_t heads) {
  ad::Tape tape;
  auto out = multi_head_self_attention(tape.constant(x), bind(tape, w, false), heads);
  return out.value();
}

Attention identity_attention(std::size_t d) {
  auto eye = [d] {
    Tensor t({d, d}, 0.0);
    for (std::size_t i = 0; i < d; ++i) t(i, i) = 1.0;
    return Linear{t, Tensor({1, d}, 0.0)};
  };
  return Attention{eye(), eye(), eye(), eye()};
}

NormT<ad::Var> bind(ad::Tape& tape, const Norm& n, bool requires_grad) {
  return {tape.leaf(n.gamma, requires_grad), tape.leaf(n.beta, requires_grad)};
}

LinearT<ad::Var> bind(ad::Tape& tape, const Linear& l, bool requires_grad) {
  return {tape.leaf(l.weight, requires_grad), tape.leaf(l.bias, requires_grad)};
}

AttentionT<ad::Var> bind(ad::Tape& tape, const Attention& a, bool requires_grad) {
  return {bind(tape, a.query, requires_grad), bind(tape, a.key, requires_grad),
          bind(tape, a.value, requires_grad), bind(tape, a.output, requires_grad)};
}

}  // namespace victr
