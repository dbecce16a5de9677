#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "victr/data/bundle.hpp"
#include "victr/head/config.hpp"
#include "victr/head/params.hpp"
#include "victr/numerics/autodiff.hpp"
#include "victr/numerics/grad_check.hpp"

namespace victr {

/// T x (1+n+m) x D token grid, stored as (T * S) x D with row t*S + s.
///
/// Token index 0 is the visual token, 1..n the class-text tokens and
/// n+1..n+m the auxiliary tokens.
struct TokenGrid {
  Tensor tokens;
  std::size_t frames = 0;
  std::size_t n_classes = 0;
  std::size_t n_aux = 0;

  [[nodiscard]] std::size_t per_frame() const noexcept { return 1 + n_classes + n_aux; }
  [[nodiscard]] std::size_t dim() const { return tokens.cols(); }
  [[nodiscard]] std::size_t row(std::size_t t, std::size_t s) const noexcept {
    return t * per_frame() + s;
  }

  // Splits into visual (T x D), class (T*n x D) and aux (T*m x D) slices,
  // each ordered by time then token.
  [[nodiscard]] Tensor visual() const;
  [[nodiscard]] Tensor class_text() const;
  [[nodiscard]] Tensor aux_text() const;
  static TokenGrid join(const Tensor& visual, const Tensor& class_text, const Tensor& aux_text,
                        std::size_t n_classes, std::size_t n_aux);

  void validate() const;  // ShapeError if the token count is not T*(1+n+m)
};

/// Tape-side token grid.
struct GridVar {
  ad::Var tokens;
  std::size_t frames = 0;
  std::size_t per_frame = 0;

  [[nodiscard]] TokenGrid snapshot(std::size_t n_classes, std::size_t n_aux) const;
};

// Row groups of the two attention axes.
ad::RowGroups timestep_groups(std::size_t frames, std::size_t per_frame);
ad::RowGroups token_groups(std::size_t frames, std::size_t per_frame);

/// sigmoid(w * cosine(a, b)), strictly inside (0, 1).
double sig_affinity(std::span<const double> a, std::span<const double> b, double gate);

/// Per-row text weights at one gating site; `anchor` and `text` are R x D,
/// result R x 1. Returns an invalid Var for WeightingMode::none.
ad::Var site_weights(ad::Var anchor, ad::Var text, ad::Var gate, WeightingMode mode);

/// Builds the grid: frame t at token 0; every text embedding replicated per
/// frame and scaled by its site weight against that frame.
GridVar token_boost(ad::Var frames, ad::Var texts, ad::Var gate, WeightingMode mode);

/// Z + MSA(LN(Z)) over the token axis, independently for each timestep.
GridVar cross_modal_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                              const AttentionT<ad::Var>& attn, std::size_t heads);

/// Z + MSA(LN(Z)) over the time axis, independently for each token index.
/// Bidirectional, no positional information.
GridVar temporal_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                           const AttentionT<ad::Var>& attn, std::size_t heads);

/// Z + MSA(LN(Z)) with all T * S tokens in one sequence.
GridVar joint_attention(const GridVar& grid, const NormT<ad::Var>& norm,
                        const AttentionT<ad::Var>& attn, std::size_t heads);

/// Text tokens are mean-pooled over time and the pooled token, scaled by its
/// site weight against each frame's visual token, replaces the text token at
/// every timestep (no residual). Visual tokens pass through. Identity for
/// WeightingMode::none.
GridVar affinity_reweight(const GridVar& grid, ad::Var gate, WeightingMode mode);

/// Z + W2 gelu(W1 LN(Z) + b1) + b2.
GridVar mlp_block(const GridVar& grid, const NormT<ad::Var>& norm, const LinearT<ad::Var>& in,
                  const LinearT<ad::Var>& out);

struct HeadOutputs {
  ad::Var video;        // 1 x proj_dim
  ad::Var class_text;   // n x proj_dim
  ad::Var aux_category; // k x proj_dim, invalid unless aux is active
};

struct HeadInputs {
  ad::Var frames;      // T x D
  ad::Var class_text;  // n x D
  ad::Var aux_text;    // m x D; ignored unless aux is active
  std::span<const std::size_t> aux_categories;
};

/// Full head: boost, L layers of (cross-modal, temporal, re-weight, MLP) or
/// (joint, MLP) in joint mode, temporal mean-pool, per-category aux mean,
/// projection. Applies the backbone substitution toggles. When `trace` is
/// given, receives the grid entering each layer plus the final grid.
HeadOutputs head_forward(const HeadConfig& config, const BoundParams& params,
                         const HeadInputs& inputs, std::vector<TokenGrid>* trace = nullptr);

struct LogitVars {
  ad::Var class_logits;  // n x 1
  ad::Var aux_logits;    // n x k, invalid unless aux is active
};

LogitVars classify(const HeadConfig& config, const BoundParams& params, const HeadOutputs& out);

// classify() in affinity mode from explicit embeddings and temperature.
LogitVars affinity_logits(ad::Var video, ad::Var class_text, ad::Var aux_category,
                          ad::Var temperature);

/// main + aux_weight * aux, where main is softmax CE (single-label) or mean
/// sigmoid BCE (multi-label) over class logits, and aux is the same loss on
/// class_logits[x] + mean_y aux_logits[x][y]. Without aux logits, aux = 0.
ad::Var head_loss(const LogitVars& logits, const Label& label, LabelMode mode, double aux_weight);

/// Plain-value logits for one video.
struct LogitSet {
  std::vector<double> class_logits;
  std::optional<Tensor> aux_logits;  // n x k
  double temperature = 0.0;
};

// Checks that `bank`/`frames` agree with `config` (ShapeError otherwise).
void check_inputs(const HeadConfig& config, const TextBank& bank, const Tensor& frames);

// The HeadConfig a bank of texts implies for an existing architecture.
HeadConfig config_for_bank(HeadConfig config, const TextBank& bank);

LogitSet predict(const HeadConfig& config, const HeadParams& params, const EmbeddingBundle& video);

struct LossAndGrad {
  double loss = 0.0;
  LogitSet logits;
};

/// Forward + backward for one video; adds parameter gradients into `grads`.
LossAndGrad loss_and_grad(const HeadConfig& config, const HeadParams& params,
                          const EmbeddingBundle& video, LabelMode mode, double aux_weight,
                          HeadParams& grads);

/// Builds the whole forward and loss on `tape` from already-bound params.
ad::Var forward_loss(const HeadConfig& config, const BoundParams& params, const TextBank& bank,
                     const Tensor& frames, const Label& label, LabelMode mode, double aux_weight,
                     LogitVars* logits_out = nullptr);

/// Finite-difference check of the full head loss with respect to every
/// parameter and every input embedding (frames, class text, and aux text when
/// aux is active).
GradCheckReport check_head_gradients(const HeadConfig& config, const HeadParams& params,
                                     const TextBank& bank, const Tensor& frames,
                                     const Label& label, LabelMode mode, double aux_weight,
                                     double h = 1e-6);

}  // namespace victr
