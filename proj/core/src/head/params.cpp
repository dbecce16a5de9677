#include "victr/head/params.hpp"

#include "victr/errors.hpp"

namespace victr {

namespace {

Linear make_linear(std::size_t in, std::size_t out, Rng& rng) {
  Tensor w({in, out});
  for (auto& v : w.values()) v = rng.truncated_normal(kInitStd);
  return Linear{std::move(w), Tensor({1, out}, 0.0)};
}

Norm make_norm(std::size_t d) { return Norm{Tensor({1, d}, 1.0), Tensor({1, d}, 0.0)}; }

Attention make_attention(std::size_t d, Rng& rng) {
  Attention a;
  a.query = make_linear(d, d, rng);
  a.key = make_linear(d, d, rng);
  a.value = make_linear(d, d, rng);
  a.output = make_linear(d, d, rng);
  return a;
}

}  // namespace

HeadParams init_head_params(const HeadConfig& config, Rng rng) {
  config.validate();
  const std::size_t d = config.embed_dim;
  HeadParams p;
  p.boost_gate = Tensor::scalar(kInitGate);
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    Rng layer_rng = rng.fork(100 + l);
    LayerParamsT<Tensor> layer;
    layer.cross_norm = make_norm(d);
    layer.cross_attention = make_attention(d, layer_rng);
    layer.temporal_norm = make_norm(d);
    layer.temporal_attention = make_attention(d, layer_rng);
    layer.mlp_norm = make_norm(d);
    layer.mlp_in = make_linear(d, kMlpExpansion * d, layer_rng);
    layer.mlp_out = make_linear(kMlpExpansion * d, d, layer_rng);
    layer.gate = Tensor::scalar(kInitGate);
    p.layers.push_back(std::move(layer));
  }
  Rng head_rng = rng.fork(1);
  p.projection = make_linear(d, config.proj_dim, head_rng);
  p.temperature = Tensor::scalar(kInitTemperature);
  if (config.classifier_mode == ClassifierMode::text_only) {
    p.text_classifier = make_linear(config.proj_dim, 1, head_rng);
  }
  if (config.classifier_mode == ClassifierMode::visual_only) {
    p.visual_classifier = make_linear(config.proj_dim, config.n_classes, head_rng);
  }
  return p;
}

HeadParams zeros_like(const HeadParams& params) {
  HeadParams out = params;
  visit_params(out, [](const std::string&, Tensor& t) { t.fill(0.0); });
  return out;
}

std::size_t parameter_count(const HeadParams& params) {
  std::size_t n = 0;
  visit_params(params, [&](const std::string&, const Tensor& t) { n += t.size(); });
  return n;
}

BoundParams bind_params(ad::Tape& tape, const HeadParams& params, bool requires_grad) {
  BoundParams b;
  b.layers.resize(params.layers.size());
  if (params.text_classifier) b.text_classifier.emplace();
  if (params.visual_classifier) b.visual_classifier.emplace();
  std::vector<const Tensor*> src;
  visit_params(params, [&](const std::string&, const Tensor& t) { src.push_back(&t); });
  std::size_t i = 0;
  visit_params(b, [&](const std::string&, ad::Var& v) { v = tape.leaf(*src[i++], requires_grad); });
  return b;
}

void accumulate_grads(const BoundParams& bound, HeadParams& accum) {
  std::vector<const ad::Var*> vars;
  visit_params(bound, [&](const std::string&, const ad::Var& v) { vars.push_back(&v); });
  std::size_t i = 0;
  visit_params(accum, [&](const std::string& name, Tensor& t) {
    const ad::Var& v = *vars.at(i++);
    const Tensor& g = v.grad();
    if (g.empty()) return;
    if (g.size() != t.size()) throw ShapeError("gradient size mismatch for " + name);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += g[j];
  });
}

std::vector<ParamRef> param_refs(HeadParams& params, const HeadParams& grads) {
  std::vector<const Tensor*> g;
  visit_params(grads, [&](const std::string&, const Tensor& t) { g.push_back(&t); });
  std::vector<ParamRef> refs;
  std::size_t i = 0;
  visit_params(params, [&](const std::string& name, Tensor& t) {
    const bool is_matrix = name.ends_with(".weight");
    refs.push_back(ParamRef{&t, g.at(i++), is_matrix});
  });
  return refs;
}

}  // namespace victr
