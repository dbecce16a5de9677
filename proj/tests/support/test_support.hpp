#pragma once

#include <cmath>
#include <memory>
#include <numbers>

#include "victr/data/bundle.hpp"
#include "victr/head/config.hpp"
#include "victr/head/head.hpp"
#include "victr/head/params.hpp"
#include "victr/numerics/nn.hpp"
#include "victr/numerics/rng.hpp"

namespace victr::fixtures {

inline Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

inline Linear random_linear(Rng& rng, std::size_t in, std::size_t out, double scale = 0.5) {
  return {random_tensor(rng, in, out, scale), random_tensor(rng, 1, out, 0.1)};
}

inline Attention random_attention(Rng& rng, std::size_t d, double scale = 0.5) {
  return {random_linear(rng, d, d, scale), random_linear(rng, d, d, scale),
          random_linear(rng, d, d, scale), random_linear(rng, d, d, scale)};
}

inline Norm random_norm(Rng& rng, std::size_t d) {
  Tensor gamma({1, d});
  for (auto& v : gamma.values()) v = 1.0 + 0.2 * rng.normal();
  return {gamma, random_tensor(rng, 1, d, 0.1)};
}

inline TextBank random_bank(Rng& rng, std::size_t n, std::size_t m, std::size_t k, std::size_t d) {
  TextBank bank;
  bank.class_text = random_tensor(rng, n, d);
  if (m > 0) bank.aux_text = random_tensor(rng, m, d);
  bank.n_categories = k;
  for (std::size_t y = 0; y < m; ++y) bank.aux_categories.push_back(y % k);
  return bank;
}

/// The gradient-check toy: T=2 frames, n=3, m=2, k=1, D=8, L=2.
inline HeadConfig toy_config() {
  HeadConfig c;
  c.embed_dim = 8;
  c.num_layers = 2;
  c.num_heads = 2;
  c.proj_dim = 8;
  c.n_classes = 3;
  c.n_aux = 2;
  c.n_categories = 1;
  return c;
}

inline EmbeddingBundle make_video(std::shared_ptr<const TextBank> bank, Tensor frames, Label label) {
  EmbeddingBundle b;
  b.video_id = "v";
  b.frames = std::move(frames);
  b.label = std::move(label);
  b.text = std::move(bank);
  return b;
}

/// Plain-value snapshot of one head evaluation.
struct HeadRun {
  Tensor video, class_text, aux_category;
  Tensor class_logits, aux_logits;
  double loss = 0.0;
  std::vector<TokenGrid> trace;
};

inline HeadRun run_head(const HeadConfig& config, const HeadParams& params, const TextBank& bank,
                        const Tensor& frames, const Label& label = std::size_t{0},
                        LabelMode mode = LabelMode::single_label, double aux_weight = 0.1) {
  ad::Tape tape;
  auto bound = bind_params(tape, params, false);
  HeadInputs in;
  in.frames = tape.constant(frames);
  in.class_text = tape.constant(bank.class_text);
  if (config.aux_active()) in.aux_text = tape.constant(bank.aux_text);
  in.aux_categories = bank.aux_categories;
  HeadRun r;
  auto out = head_forward(config, bound, in, &r.trace);
  auto logits = classify(config, bound, out);
  r.video = out.video.value();
  r.class_text = out.class_text.value();
  if (out.aux_category.valid()) r.aux_category = out.aux_category.value();
  r.class_logits = logits.class_logits.value();
  if (logits.aux_logits.valid()) r.aux_logits = logits.aux_logits.value();
  r.loss = head_loss(logits, label, mode, aux_weight).value()[0];
  return r;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Element-wise max |a - b|; infinite on shape mismatch.
inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace victr::fixtures
