#include "victr/head/config.hpp"

#include <string>

#include "victr/errors.hpp"
#include "victr/util/parse.hpp"

namespace victr {

std::string_view to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::sig_affinity: return "sig_affinity";
    case WeightingMode::none: return "none";
    case WeightingMode::learned_scalar: return "learned_scalar";
    case WeightingMode::attention: return "attention";
  }
  return "?";
}

std::string_view to_string(AttentionMode m) {
  return m == AttentionMode::divided ? "divided" : "joint";
}

std::string_view to_string(ClassifierMode m) {
  switch (m) {
    case ClassifierMode::affinity: return "affinity";
    case ClassifierMode::text_only: return "text_only";
    case ClassifierMode::visual_only: return "visual_only";
  }
  return "?";
}

WeightingMode parse_weighting_mode(std::string_view s) {
  if (s == "sig_affinity") return WeightingMode::sig_affinity;
  if (s == "none") return WeightingMode::none;
  if (s == "learned_scalar") return WeightingMode::learned_scalar;
  if (s == "attention") return WeightingMode::attention;
  throw ConfigError("unknown weighting mode '" + std::string(s) + "'");
}

AttentionMode parse_attention_mode(std::string_view s) {
  if (s == "divided") return AttentionMode::divided;
  if (s == "joint") return AttentionMode::joint;
  throw ConfigError("unknown attention mode '" + std::string(s) + "'");
}

ClassifierMode parse_classifier_mode(std::string_view s) {
  if (s == "affinity") return ClassifierMode::affinity;
  if (s == "text_only") return ClassifierMode::text_only;
  if (s == "visual_only") return ClassifierMode::visual_only;
  throw ConfigError("unknown classifier mode '" + std::string(s) + "'");
}

void HeadConfig::validate() const {
  if (embed_dim < 8) throw ConfigError("head.embed_dim must be >= 8");
  if (num_heads == 0 || embed_dim % num_heads != 0) {
    throw ConfigError("head.embed_dim (" + std::to_string(embed_dim) +
                      ") must be divisible by head.num_heads (" + std::to_string(num_heads) + ")");
  }
  if (proj_dim < 2) throw ConfigError("head.proj_dim must be >= 2");
  if (n_classes < 2) throw ConfigError("head.n_classes must be >= 2");
  if (n_aux > 0 && n_categories == 0) throw ConfigError("head.n_categories must be >= 1");
  if (use_aux && n_aux > 0 && n_categories > n_aux) {
    throw ConfigError("head.n_categories exceeds head.n_aux; some category would be empty");
  }
}

std::vector<std::pair<std::string, std::string>> to_entries(const HeadConfig& c) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"embed_dim", std::to_string(c.embed_dim)},
      {"num_layers", std::to_string(c.num_layers)},
      {"num_heads", std::to_string(c.num_heads)},
      {"proj_dim", std::to_string(c.proj_dim)},
      {"n_classes", std::to_string(c.n_classes)},
      {"n_aux", std::to_string(c.n_aux)},
      {"n_categories", std::to_string(c.n_categories)},
      {"use_aux", b(c.use_aux)},
      {"weighting_mode", std::string(to_string(c.weighting_mode))},
      {"attention_mode", std::string(to_string(c.attention_mode))},
      {"classifier_mode", std::string(to_string(c.classifier_mode))},
      {"substitute_backbone_text", b(c.substitute_backbone_text)},
      {"substitute_backbone_visual", b(c.substitute_backbone_visual)},
  };
}

void set_entry(HeadConfig& c, std::string_view key, std::string_view value) {
  const std::string full = "head." + std::string(key);
  if (key == "embed_dim") c.embed_dim = parse_size(value, full);
  else if (key == "num_layers") c.num_layers = parse_size(value, full);
  else if (key == "num_heads") c.num_heads = parse_size(value, full);
  else if (key == "proj_dim") c.proj_dim = parse_size(value, full);
  else if (key == "n_classes") c.n_classes = parse_size(value, full);
  else if (key == "n_aux") c.n_aux = parse_size(value, full);
  else if (key == "n_categories") c.n_categories = parse_size(value, full);
  else if (key == "use_aux") c.use_aux = parse_bool(value, full);
  else if (key == "weighting_mode") c.weighting_mode = parse_weighting_mode(value);
  else if (key == "attention_mode") c.attention_mode = parse_attention_mode(value);
  else if (key == "classifier_mode") c.classifier_mode = parse_classifier_mode(value);
  else if (key == "substitute_backbone_text") c.substitute_backbone_text = parse_bool(value, full);
  else if (key == "substitute_backbone_visual") c.substitute_backbone_visual = parse_bool(value, full);
  else throw ConfigError("unknown key '" + full + "'");
}

}  // namespace victr
