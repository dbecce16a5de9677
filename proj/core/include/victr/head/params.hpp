#pragma once

#include <optional>
#include <string>
#include <vector>

#include "victr/head/config.hpp"
#include "victr/numerics/autodiff.hpp"
#include "victr/numerics/nn.hpp"
#include "victr/numerics/optim.hpp"
#include "victr/numerics/rng.hpp"

namespace victr {

template <class T>
struct LayerParamsT {
  NormT<T> cross_norm;
  AttentionT<T> cross_attention;
  NormT<T> temporal_norm;
  AttentionT<T> temporal_attention;
  NormT<T> mlp_norm;
  LinearT<T> mlp_in;   // D -> 4D
  LinearT<T> mlp_out;  // 4D -> D
  T gate;              // re-weighting site scalar, 1x1
};

/// All trainable state of the head. Nothing here is sized by n or m except
/// the visual-only classifier, so affinity-mode heads transfer across label
/// vocabularies.
template <class T>
struct HeadParamsT {
  T boost_gate;  // token-boosting site scalar, 1x1
  std::vector<LayerParamsT<T>> layers;
  LinearT<T> projection;  // D -> proj_dim
  T temperature;          // 1x1
  std::optional<LinearT<T>> text_classifier;    // proj_dim -> 1
  std::optional<LinearT<T>> visual_classifier;  // proj_dim -> n
};

using HeadParams = HeadParamsT<Tensor>;
using BoundParams = HeadParamsT<ad::Var>;

// Visits every tensor as (name, T&) in a fixed order. The order defines the
// checkpoint layout and the optimizer's parameter indexing.
template <class P, class F>
void visit_params(P& p, F&& f) {
  f(std::string("boost_gate"), p.boost_gate);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layers." + std::to_string(i);
    visit_fields(l.cross_norm, pre + ".cross_norm", f);
    visit_fields(l.cross_attention, pre + ".cross_attention", f);
    visit_fields(l.temporal_norm, pre + ".temporal_norm", f);
    visit_fields(l.temporal_attention, pre + ".temporal_attention", f);
    visit_fields(l.mlp_norm, pre + ".mlp_norm", f);
    visit_fields(l.mlp_in, pre + ".mlp_in", f);
    visit_fields(l.mlp_out, pre + ".mlp_out", f);
    f(pre + ".gate", l.gate);
  }
  visit_fields(p.projection, std::string("projection"), f);
  f(std::string("temperature"), p.temperature);
  if (p.text_classifier) visit_fields(*p.text_classifier, std::string("text_classifier"), f);
  if (p.visual_classifier) visit_fields(*p.visual_classifier, std::string("visual_classifier"), f);
}

inline constexpr double kInitStd = 0.02;
inline constexpr double kInitGate = 1.0;
inline constexpr double kInitTemperature = 1.0 / 0.07;
inline constexpr double kMaxTemperature = 100.0;
inline constexpr std::size_t kMlpExpansion = 4;

// Truncated-normal(0.02) weights, zero biases, unit LayerNorm gains, gates at
// 1 and temperature at 1/0.07. Deterministic in (config, rng).
HeadParams init_head_params(const HeadConfig& config, Rng rng);

// Same structure, every tensor zero-filled (gradient accumulators).
HeadParams zeros_like(const HeadParams& params);

std::size_t parameter_count(const HeadParams& params);

// Places every tensor on the tape as a leaf.
BoundParams bind_params(ad::Tape& tape, const HeadParams& params, bool requires_grad);

// Adds the tape gradients of `bound` into `accum` (missing gradients = 0).
void accumulate_grads(const BoundParams& bound, HeadParams& accum);

// Optimizer view; decay applies to weight matrices only.
std::vector<ParamRef> param_refs(HeadParams& params, const HeadParams& grads);

}  // namespace victr
