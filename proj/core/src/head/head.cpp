#include "victr/head/head.hpp"

#include <cmath>
#include <string>

#include "victr/errors.hpp"
#include "victr/numerics/nn.hpp"

namespace victr {

// ---------------------------------------------------------------------------
// TokenGrid layout

namespace {

Tensor gather_plain(const Tensor& src, const std::vector<std::size_t>& rows) {
  const std::size_t d = src.cols();
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(src.row(rows[i]).begin(), d, out.row(i).begin());
  }
  return out;
}

std::vector<std::size_t> token_rows(const TokenGrid& g, std::size_t first, std::size_t count) {
  std::vector<std::size_t> rows;
  rows.reserve(g.frames * count);
  for (std::size_t t = 0; t < g.frames; ++t) {
    for (std::size_t s = first; s < first + count; ++s) rows.push_back(g.row(t, s));
  }
  return rows;
}

// Row order of concat(visual T rows, text T*M rows ordered (t, x)) -> grid.
std::vector<std::size_t> interleave_perm(std::size_t frames, std::size_t texts) {
  const std::size_t per = 1 + texts;
  std::vector<std::size_t> perm(frames * per);
  for (std::size_t t = 0; t < frames; ++t) {
    perm[t * per] = t;
    for (std::size_t x = 0; x < texts; ++x) perm[t * per + 1 + x] = frames + t * texts + x;
  }
  return perm;
}

}  // namespace

Tensor TokenGrid::visual() const { return gather_plain(tokens, token_rows(*this, 0, 1)); }

Tensor TokenGrid::class_text() const {
  return gather_plain(tokens, token_rows(*this, 1, n_classes));
}

Tensor TokenGrid::aux_text() const {
  if (n_aux == 0) return Tensor({0, dim()});
  return gather_plain(tokens, token_rows(*this, 1 + n_classes, n_aux));
}

TokenGrid TokenGrid::join(const Tensor& visual, const Tensor& class_text, const Tensor& aux_text,
                          std::size_t n_classes, std::size_t n_aux) {
  const std::size_t frames = visual.rows();
  const std::size_t d = visual.cols();
  if (class_text.rows() != frames * n_classes || (n_aux > 0 && aux_text.rows() != frames * n_aux)) {
    throw ShapeError("TokenGrid::join: slice sizes do not match T x (1+n+m)");
  }
  TokenGrid g{Tensor({frames * (1 + n_classes + n_aux), d}), frames, n_classes, n_aux};
  for (std::size_t t = 0; t < frames; ++t) {
    std::copy_n(visual.row(t).begin(), d, g.tokens.row(g.row(t, 0)).begin());
    for (std::size_t x = 0; x < n_classes; ++x) {
      std::copy_n(class_text.row(t * n_classes + x).begin(), d, g.tokens.row(g.row(t, 1 + x)).begin());
    }
    for (std::size_t y = 0; y < n_aux; ++y) {
      std::copy_n(aux_text.row(t * n_aux + y).begin(), d,
                  g.tokens.row(g.row(t, 1 + n_classes + y)).begin());
    }
  }
  return g;
}

void TokenGrid::validate() const {
  if (tokens.rows() != frames * per_frame()) {
    throw ShapeError("token grid holds " + std::to_string(tokens.rows()) + " tokens, expected " +
                     std::to_string(frames) + " x " + std::to_string(per_frame()));
  }
}

TokenGrid GridVar::snapshot(std::size_t n_classes, std::size_t n_aux) const {
  TokenGrid g{tokens.value(), frames, n_classes, n_aux};
  g.validate();
  return g;
}

ad::RowGroups timestep_groups(std::size_t frames, std::size_t per_frame) {
  ad::RowGroups groups(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t s = 0; s < per_frame; ++s) groups[t].push_back(t * per_frame + s);
  }
  return groups;
}

ad::RowGroups token_groups(std::size_t frames, std::size_t per_frame) {
  ad::RowGroups groups(per_frame);
  for (std::size_t s = 0; s < per_frame; ++s) {
    for (std::size_t t = 0; t < frames; ++t) groups[s].push_back(t * per_frame + s);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Gating

double sig_affinity(std::span<const double> a, std::span<const double> b, double gate) {
  const double x = gate * cosine_affinity(a, b);
  return 1.0 / (1.0 + std::exp(-x));
}

ad::Var site_weights(ad::Var anchor, ad::Var text, ad::Var gate, WeightingMode mode) {
  switch (mode) {
    case WeightingMode::none:
      return {};
    case WeightingMode::sig_affinity:
      return ad::sigmoid(ad::scale_by(ad::row_cosine(anchor, text, kNormFloor), gate));
    case WeightingMode::learned_scalar:
      return ad::gather_rows(ad::sigmoid(gate), std::vector<std::size_t>(anchor.rows(), 0));
    case WeightingMode::attention: {
      const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(anchor.cols()));
      return ad::sigmoid(ad::scale_by(ad::mul_const(ad::row_dot(anchor, text), inv_sqrt_d), gate));
    }
  }
  throw ConfigError("unknown weighting mode");
}

// ---------------------------------------------------------------------------
// Blocks

GridVar token_boost(ad::Var frames, ad::Var texts, ad::Var gate, WeightingMode mode) {
  const std::size_t T = frames.rows();
  const std::size_t M = texts.rows();
  if (frames.cols() != texts.cols()) throw ShapeError("token_boost: frame/text width mismatch");
  std::vector<std::size_t> frame_idx(T * M), text_idx(T * M);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t x = 0; x < M; ++x) {
      frame_idx[t * M + x] = t;
      text_idx[t * M + x] = x;
    }
  }
  ad::Var replicated = ad::gather_rows(texts, std::move(text_idx));
  if (mode != WeightingMode::none) {
    auto anchors = ad::gather_rows(frames, std::move(frame_idx));
    replicated = ad::row_scale(replicated, site_weights(anchors, replicated, gate, mode));
  }
  const ad::Var parts[] = {frames, replicated};
  auto tokens = ad::gather_rows(ad::concat_rows(parts), interleave_perm(T, M));
  return {tokens, T, 1 + M};
}

namespace {

GridVar attention_residual(const GridVar& grid, const NormT<ad::Var>& norm,
                           const AttentionT<ad::Var>& attn, std::size_t heads,
                           const ad::RowGroups& groups) {
  auto normed = apply_norm(grid.tokens, norm);
  auto mixed = multi_head_self_attention(normed, attn, heads, groups);
  return {ad::add(grid.tokens, mixed), grid.frames, grid.per_frame};
}

}  // namespace

GridVar cross_modal_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                              const AttentionT<ad::Var>& attn, std::size_t heads) {
  return attention_residual(grid, norm, attn, heads, timestep_groups(grid.frames, grid.per_frame));
}

GridVar temporal_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                           const AttentionT<ad::Var>& attn, std::size_t heads) {
  return attention_residual(grid, norm, attn, heads, token_groups(grid.frames, grid.per_frame));
}

GridVar joint_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                        const AttentionT<ad::Var>& attn, std::size_t heads) {
  ad::RowGroups all(1);
  for (std::size_t r = 0; r < grid.frames * grid.per_frame; ++r) all[0].push_back(r);
  return attention_residual(grid, norm, attn, heads, all);
}

GridVar affinity_reweight(const GridVar& grid, ad::Var gate, WeightingMode mode) {
  if (mode == WeightingMode::none) return grid;
  const std::size_t T = grid.frames;
  const std::size_t S = grid.per_frame;
  const std::size_t M = S - 1;
  if (M == 0) return grid;

  std::vector<std::size_t> visual_rows(T);
  for (std::size_t t = 0; t < T; ++t) visual_rows[t] = t * S;
  ad::RowGroups text_over_time(M);
  for (std::size_t x = 0; x < M; ++x) {
    for (std::size_t t = 0; t < T; ++t) text_over_time[x].push_back(t * S + 1 + x);
  }
  auto visual = ad::gather_rows(grid.tokens, visual_rows);
  auto pooled = ad::group_mean(grid.tokens, text_over_time);

  std::vector<std::size_t> frame_idx(T * M), text_idx(T * M);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t x = 0; x < M; ++x) {
      frame_idx[t * M + x] = t;
      text_idx[t * M + x] = x;
    }
  }
  auto replicated = ad::gather_rows(pooled, std::move(text_idx));
  auto anchors = ad::gather_rows(visual, std::move(frame_idx));
  auto reweighted = ad::row_scale(replicated, site_weights(anchors, replicated, gate, mode));
  const ad::Var parts[] = {visual, reweighted};
  return {ad::gather_rows(ad::concat_rows(parts), interleave_perm(T, M)), T, S};
}

GridVar mlp_block(const GridVar& grid, const NormT<ad::Var>& norm, const LinearT<ad::Var>& in,
                  const LinearT<ad::Var>& out) {
  auto hidden = ad::gelu(apply_linear(apply_norm(grid.tokens, norm), in));
  return {ad::add(grid.tokens, apply_linear(hidden, out)), grid.frames, grid.per_frame};
}

// ---------------------------------------------------------------------------
// Forward

HeadOutputs head_forward(const HeadConfig& config, const BoundParams& params,
                         const HeadInputs& inputs, std::vector<TokenGrid>* trace) {
  const std::size_t D = config.embed_dim;
  const std::size_t n = config.n_classes;
  const bool aux = config.aux_active();
  const std::size_t m = aux ? config.n_aux : 0;
  if (inputs.frames.cols() != D || inputs.class_text.cols() != D) {
    throw ShapeError("head_forward: embedding width differs from head.embed_dim");
  }
  if (inputs.class_text.rows() != n) {
    throw ShapeError("head_forward: " + std::to_string(inputs.class_text.rows()) +
                     " class embeddings for a head configured with n=" + std::to_string(n));
  }
  if (params.layers.size() != config.num_layers) {
    throw ShapeError("head_forward: parameter layer count differs from head.num_layers");
  }
  if (aux && (!inputs.aux_text.valid() || inputs.aux_text.rows() != m ||
              inputs.aux_categories.size() != m)) {
    throw ShapeError("head_forward: aux inputs do not match head.n_aux");
  }

  ad::Var texts = inputs.class_text;
  if (aux) {
    const ad::Var parts[] = {inputs.class_text, inputs.aux_text};
    texts = ad::concat_rows(parts);
  }

  GridVar grid = token_boost(inputs.frames, texts, params.boost_gate, config.weighting_mode);
  auto record = [&] {
    if (trace) trace->push_back(grid.snapshot(n, m));
  };
  record();
  for (const auto& layer : params.layers) {
    if (config.attention_mode == AttentionMode::divided) {
      grid = cross_modal_attention(grid, layer.cross_norm, layer.cross_attention, config.num_heads);
      grid = temporal_attention(grid, layer.temporal_norm, layer.temporal_attention,
                                config.num_heads);
    } else {
      grid = joint_attention(grid, layer.cross_norm, layer.cross_attention, config.num_heads);
    }
    grid = affinity_reweight(grid, layer.gate, config.weighting_mode);
    grid = mlp_block(grid, layer.mlp_norm, layer.mlp_in, layer.mlp_out);
    record();
  }

  auto pooled = ad::group_mean(grid.tokens, token_groups(grid.frames, grid.per_frame));

  std::vector<std::size_t> class_rows(n);
  for (std::size_t x = 0; x < n; ++x) class_rows[x] = 1 + x;
  ad::Var video = config.substitute_backbone_visual ? ad::mean_rows(inputs.frames)
                                                    : ad::gather_rows(pooled, {0});
  ad::Var class_text = config.substitute_backbone_text ? inputs.class_text
                                                       : ad::gather_rows(pooled, class_rows);

  std::vector<ad::Var> stack = {video, class_text};
  std::size_t k = 0;
  if (aux) {
    k = config.n_categories;
    ad::RowGroups categories(k);
    for (std::size_t y = 0; y < m; ++y) {
      const auto c = inputs.aux_categories[y];
      if (c >= k) throw ShapeError("head_forward: aux category id out of range");
      categories[c].push_back(1 + n + y);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (categories[c].empty()) {
        throw ShapeError("head_forward: aux category " + std::to_string(c) + " has no members");
      }
    }
    stack.push_back(ad::group_mean(pooled, categories));
  }

  auto projected = apply_linear(ad::concat_rows(stack), params.projection);
  HeadOutputs out;
  out.video = ad::gather_rows(projected, {0});
  std::vector<std::size_t> proj_class(n);
  for (std::size_t x = 0; x < n; ++x) proj_class[x] = 1 + x;
  out.class_text = ad::gather_rows(projected, proj_class);
  if (aux) {
    std::vector<std::size_t> proj_aux(k);
    for (std::size_t c = 0; c < k; ++c) proj_aux[c] = 1 + n + c;
    out.aux_category = ad::gather_rows(projected, proj_aux);
  }
  return out;
}

LogitVars affinity_logits(ad::Var video, ad::Var class_text, ad::Var aux_category,
                          ad::Var temperature) {
  const std::size_t n = class_text.rows();
  LogitVars out;
  auto video_rep = ad::gather_rows(video, std::vector<std::size_t>(n, 0));
  out.class_logits = ad::scale_by(ad::row_cosine(video_rep, class_text, kNormFloor), temperature);
  if (aux_category.valid()) {
    const std::size_t k = aux_category.rows();
    std::vector<std::size_t> text_idx(n * k), aux_idx(n * k);
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < k; ++y) {
        text_idx[x * k + y] = x;
        aux_idx[x * k + y] = y;
      }
    }
    auto cos = ad::row_cosine(ad::gather_rows(class_text, std::move(text_idx)),
                              ad::gather_rows(aux_category, std::move(aux_idx)), kNormFloor);
    out.aux_logits = ad::reshape(ad::scale_by(cos, temperature), {n, k});
  }
  return out;
}

LogitVars classify(const HeadConfig& config, const BoundParams& params, const HeadOutputs& out) {
  LogitVars logits = affinity_logits(out.video, out.class_text, out.aux_category,
                                     params.temperature);
  const std::size_t n = out.class_text.rows();
  switch (config.classifier_mode) {
    case ClassifierMode::affinity:
      break;
    case ClassifierMode::text_only:
      if (!params.text_classifier) throw ShapeError("classify: text classifier parameters missing");
      logits.class_logits = apply_linear(out.class_text, *params.text_classifier);
      break;
    case ClassifierMode::visual_only: {
      if (!params.visual_classifier) {
        throw ShapeError("classify: visual classifier parameters missing");
      }
      if (params.visual_classifier->weight.cols() != n) {
        throw ShapeError("classify: visual classifier is sized for a different class count");
      }
      logits.class_logits =
          ad::reshape(apply_linear(out.video, *params.visual_classifier), {n, 1});
      break;
    }
  }
  return logits;
}

namespace {

ad::Var label_loss(ad::Var logits, const Label& label, LabelMode mode) {
  validate_label(label, mode, logits.rows());
  if (mode == LabelMode::single_label) {
    return ad::softmax_cross_entropy(logits, std::get<std::size_t>(label));
  }
  return ad::sigmoid_bce_mean(logits, label_targets(label, logits.rows()));
}

}  // namespace

ad::Var head_loss(const LogitVars& logits, const Label& label, LabelMode mode, double aux_weight) {
  auto main = label_loss(logits.class_logits, label, mode);
  if (!logits.aux_logits.valid()) return main;
  const std::size_t n = logits.aux_logits.rows();
  const std::size_t k = logits.aux_logits.cols();
  ad::RowGroups per_class(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < k; ++y) per_class[x].push_back(x * k + y);
  }
  auto aux_mean = ad::group_mean(ad::reshape(logits.aux_logits, {n * k, 1}), per_class);
  auto augmented = ad::add(logits.class_logits, aux_mean);
  auto aux = label_loss(augmented, label, mode);
  return ad::add(main, ad::mul_const(aux, aux_weight));
}

// ---------------------------------------------------------------------------
// Plain-value entry points

void check_inputs(const HeadConfig& config, const TextBank& bank, const Tensor& frames) {
  if (bank.dim() != config.embed_dim || frames.cols() != config.embed_dim) {
    throw ShapeError("embedding width " + std::to_string(frames.cols()) +
                     " differs from head.embed_dim " + std::to_string(config.embed_dim));
  }
  if (bank.n_classes() != config.n_classes) {
    throw ShapeError("text bank has " + std::to_string(bank.n_classes()) +
                     " classes, head expects " + std::to_string(config.n_classes));
  }
  if (config.aux_active() &&
      (bank.n_aux() != config.n_aux || bank.n_categories != config.n_categories)) {
    throw ShapeError("text bank aux layout differs from head configuration");
  }
  if (frames.rank() != 2 || frames.rows() == 0) throw ShapeError("video has no frames");
  require_nonzero_rows(frames, "frames");
  require_nonzero_rows(bank.class_text, "class text");
  if (config.aux_active()) require_nonzero_rows(bank.aux_text, "aux text");
}

HeadConfig config_for_bank(HeadConfig config, const TextBank& bank) {
  config.n_classes = bank.n_classes();
  config.n_aux = bank.n_aux();
  config.n_categories = bank.n_categories;
  return config;
}

namespace {

HeadInputs bind_inputs(ad::Tape& tape, const HeadConfig& config, const TextBank& bank,
                       const Tensor& frames) {
  HeadInputs in;
  in.frames = tape.constant(frames);
  in.class_text = tape.constant(bank.class_text);
  if (config.aux_active()) {
    in.aux_text = tape.constant(bank.aux_text);
    in.aux_categories = bank.aux_categories;
  }
  return in;
}

LogitSet to_logit_set(const LogitVars& v, double temperature) {
  LogitSet out;
  const auto& cl = v.class_logits.value();
  out.class_logits.assign(cl.values().begin(), cl.values().end());
  if (v.aux_logits.valid()) out.aux_logits = v.aux_logits.value();
  out.temperature = temperature;
  return out;
}

}  // namespace

LogitSet predict(const HeadConfig& config, const HeadParams& params, const EmbeddingBundle& video) {
  if (!video.text) throw ShapeError("bundle has no text bank");
  check_inputs(config, *video.text, video.frames);
  ad::Tape tape;
  auto bound = bind_params(tape, params, false);
  auto out = head_forward(config, bound, bind_inputs(tape, config, *video.text, video.frames));
  return to_logit_set(classify(config, bound, out), params.temperature[0]);
}

ad::Var forward_loss(const HeadConfig& config, const BoundParams& params, const TextBank& bank,
                     const Tensor& frames, const Label& label, LabelMode mode, double aux_weight,
                     LogitVars* logits_out) {
  ad::Tape& tape = *params.boost_gate.tape();
  auto out = head_forward(config, params, bind_inputs(tape, config, bank, frames));
  auto logits = classify(config, params, out);
  if (logits_out) *logits_out = logits;
  return head_loss(logits, label, mode, aux_weight);
}

LossAndGrad loss_and_grad(const HeadConfig& config, const HeadParams& params,
                          const EmbeddingBundle& video, LabelMode mode, double aux_weight,
                          HeadParams& grads) {
  if (!video.text) throw ShapeError("bundle has no text bank");
  check_inputs(config, *video.text, video.frames);
  ad::Tape tape;
  auto bound = bind_params(tape, params, true);
  LogitVars logits;
  auto loss = forward_loss(config, bound, *video.text, video.frames, video.label, mode, aux_weight,
                           &logits);
  tape.backward(loss);
  accumulate_grads(bound, grads);
  return {loss.value()[0], to_logit_set(logits, params.temperature[0])};
}

GradCheckReport check_head_gradients(const HeadConfig& config, const HeadParams& params,
                                     const TextBank& bank, const Tensor& frames,
                                     const Label& label, LabelMode mode, double aux_weight,
                                     double h) {
  check_inputs(config, bank, frames);
  std::vector<Tensor> inputs;
  visit_params(params, [&](const std::string&, const Tensor& t) { inputs.push_back(t); });
  const std::size_t n_params = inputs.size();
  inputs.push_back(frames);
  inputs.push_back(bank.class_text);
  if (config.aux_active()) inputs.push_back(bank.aux_text);

  // Structure only; every Var is replaced by the checker's leaves.
  ad::Tape scratch;
  const BoundParams skeleton = bind_params(scratch, params, false);
  auto f = [&](ad::Tape&, std::span<const ad::Var> vars) {
    BoundParams bound = skeleton;
    std::size_t i = 0;
    visit_params(bound, [&](const std::string&, ad::Var& v) { v = vars[i++]; });
    HeadInputs in;
    in.frames = vars[n_params];
    in.class_text = vars[n_params + 1];
    if (config.aux_active()) {
      in.aux_text = vars[n_params + 2];
      in.aux_categories = bank.aux_categories;
    }
    auto logits = classify(config, bound, head_forward(config, bound, in));
    return head_loss(logits, label, mode, aux_weight);
  };
  return grad_check(f, inputs, h);
}

}  // namespace victr
