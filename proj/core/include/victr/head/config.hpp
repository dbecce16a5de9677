#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace victr {

// How text tokens are gated at the boost site and at every layer.
enum class WeightingMode : std::uint8_t {
  sig_affinity,    // sigmoid(w * cosine(visual, text))
  none,            // unweighted replication; re-weighting is the identity
  learned_scalar,  // sigmoid(w), independent of content
  attention,       // sigmoid(w * <visual, text> / sqrt(D))
};

enum class AttentionMode : std::uint8_t { divided, joint };

enum class ClassifierMode : std::uint8_t {
  affinity,     // temperature-scaled cosine(video, text)
  text_only,    // shared linear map of each pooled text embedding
  visual_only,  // linear map of the pooled video embedding to n logits
};

std::string_view to_string(WeightingMode m);
std::string_view to_string(AttentionMode m);
std::string_view to_string(ClassifierMode m);
WeightingMode parse_weighting_mode(std::string_view s);
AttentionMode parse_attention_mode(std::string_view s);
ClassifierMode parse_classifier_mode(std::string_view s);

struct HeadConfig {
  std::size_t embed_dim = 512;
  std::size_t num_layers = 4;
  std::size_t num_heads = 8;
  std::size_t proj_dim = 256;
  std::size_t n_classes = 2;
  std::size_t n_aux = 0;
  std::size_t n_categories = 1;

  bool use_aux = true;
  WeightingMode weighting_mode = WeightingMode::sig_affinity;
  AttentionMode attention_mode = AttentionMode::divided;
  ClassifierMode classifier_mode = ClassifierMode::affinity;
  bool substitute_backbone_text = false;
  bool substitute_backbone_visual = false;

  // Aux tokens take part only when enabled and present.
  [[nodiscard]] bool aux_active() const noexcept { return use_aux && n_aux > 0; }
  // Token-axis extent 1 + n + m (m counted only when aux is active).
  [[nodiscard]] std::size_t tokens_per_frame() const noexcept {
    return 1 + n_classes + (aux_active() ? n_aux : 0);
  }

  // Throws ConfigError on a violated invariant.
  void validate() const;

  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

// Flat key/value view of a HeadConfig (keys without the "head." prefix), in
// a fixed order. set_entry() throws ConfigError for unknown keys or values.
std::vector<std::pair<std::string, std::string>> to_entries(const HeadConfig& config);
void set_entry(HeadConfig& config, std::string_view key, std::string_view value);

}  // namespace victr
