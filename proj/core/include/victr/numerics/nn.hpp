#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "victr/numerics/autodiff.hpp"
#include "victr/numerics/tensor.hpp"

namespace victr {

// Parameter groupings, generic over the element type so the same layout
// serves stored parameters (Tensor) and their tape bindings (ad::Var).
template <class T>
struct LinearT {
  T weight;  // in x out
  T bias;    // 1 x out
};

template <class T>
struct NormT {
  T gamma;
  T beta;
};

template <class T>
struct AttentionT {
  LinearT<T> query;
  LinearT<T> key;
  LinearT<T> value;
  LinearT<T> output;
};

using Linear = LinearT<Tensor>;
using Norm = NormT<Tensor>;
using Attention = AttentionT<Tensor>;

template <class L, class F>
  requires requires(L& l) { l.weight; l.bias; }
void visit_fields(L& l, const std::string& prefix, F&& f) {
  f(prefix + ".weight", l.weight);
  f(prefix + ".bias", l.bias);
}

template <class N, class F>
  requires requires(N& n) { n.gamma; n.beta; }
void visit_fields(N& n, const std::string& prefix, F&& f) {
  f(prefix + ".gamma", n.gamma);
  f(prefix + ".beta", n.beta);
}

template <class A, class F>
  requires requires(A& a) { a.query; a.key; a.value; a.output; }
void visit_fields(A& a, const std::string& prefix, F&& f) {
  visit_fields(a.query, prefix + ".query", f);
  visit_fields(a.key, prefix + ".key", f);
  visit_fields(a.value, prefix + ".value", f);
  visit_fields(a.output, prefix + ".output", f);
}

// ---------------------------------------------------------------------------
// Affinity

/// Cosine similarity <a,b> / (|a| |b|).
///
/// Throws ShapeError when the lengths differ or are zero, and ZeroNormError
/// when either norm is at most 1e-8. Tiny inputs are rejected rather than
/// clamped: a zero embedding means the upstream data is broken.
double cosine_affinity(std::span<const double> a, std::span<const double> b);

inline constexpr double kNormFloor = 1e-8;
inline constexpr double kLayerNormEps = 1e-5;

// ---------------------------------------------------------------------------
// Layers on the tape

ad::Var apply_linear(ad::Var x, const LinearT<ad::Var>& l);
ad::Var apply_norm(ad::Var x, const NormT<ad::Var>& n);

/// Multi-head self-attention, softmax(Q K^T / sqrt(D/h)) V per head, heads
/// concatenated and passed through the output projection. Each row group is an
/// independent sequence; rows in different groups never interact.
ad::Var multi_head_self_attention(ad::Var x, const AttentionT<ad::Var>& w, std::size_t heads,
                                  const ad::RowGroups& groups);

// Same, with every row in a single sequence.
ad::Var multi_head_self_attention(ad::Var x, const AttentionT<ad::Var>& w, std::size_t heads);

// ---------------------------------------------------------------------------
// Plain-value conveniences (no gradient)

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);
Tensor multi_head_self_attention(const Tensor& x, const Attention& w, std::size_t heads);

// Identity projection weights (zero bias) for a width-d attention block.
Attention identity_attention(std::size_t d);

NormT<ad::Var> bind(ad::Tape& tape, const Norm& n, bool requires_grad);
LinearT<ad::Var> bind(ad::Tape& tape, const Linear& l, bool requires_grad);
AttentionT<ad::Var> bind(ad::Tape& tape, const Attention& a, bool requires_grad);

}  // namespace victr
