#include "victr/eval/ablation.hpp"

#include <cstdio>
#include <json.hpp>

#include "victr/errors.hpp"
#include "victr/head/head.hpp"

namespace victr {

HeadConfig AblationSpec::apply(HeadConfig base) const {
  if (!key.empty()) set_entry(base, key, value);
  return base;
}

const std::vector<AblationSpec>& standard_ablations() {
  static const std::vector<AblationSpec> rows = {
      {"full", "", ""},
      {"No Aux. Text", "use_aux", "false"},
      {"w/ CLIP Visual emb.", "substitute_backbone_visual", "true"},
      {"w/ CLIP Text emb.", "substitute_backbone_text", "true"},
      {"No Affinity weighting", "weighting_mode", "none"},
      {"w/ joint-attention", "attention_mode", "joint"},
      {"Text Classifier", "classifier_mode", "text_only"},
      {"Visual Classifier", "classifier_mode", "visual_only"},
  };
  return rows;
}

const AblationSpec& find_ablation(std::string_view name) {
  for (const auto& row : standard_ablations()) {
    if (row.name == name) return row;
  }
  std::string known;
  for (const auto& row : standard_ablations()) known += (known.empty() ? "" : ", ") + row.name;
  throw UnknownAblationError("unknown ablation '" + std::string(name) + "' (known: " + known + ")");
}

AblationTable run_ablation_suite(const std::vector<std::string>& names, const HeadConfig& base,
                                 const TrainConfig& train_cfg, const BundleCollection& train_set,
                                 const BundleCollection& test_set, const ViewOptions& views) {
  std::vector<const AblationSpec*> specs;
  for (const auto& name : names) specs.push_back(&find_ablation(name));
  AblationTable table;
  for (const auto* spec : specs) {
    const HeadConfig cfg = config_for_bank(spec->apply(base), *train_set.text);
    cfg.validate();
    const auto trained = train(cfg, train_set, train_cfg);
    const auto result = evaluate(cfg, trained.params, test_set, views);
    AblationRow row;
    row.name = spec->name;
    row.toggle = spec->key.empty() ? "-" : spec->key + "=" + spec->value;
    row.metric = result.metric;
    row.value = result.value;
    row.final_loss = trained.loss_trace.empty() ? 0.0 : trained.loss_trace.back();
    row.seed = train_cfg.seed;
    row.steps = train_cfg.steps;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string AblationTable::to_jsonl() const {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["ablation"] = r.name;
    j["toggle"] = r.toggle;
    j["metric"] = r.metric;
    j["value"] = r.value;
    j["final_loss"] = r.final_loss;
    j["seed"] = r.seed;
    j["steps"] = r.steps;
    out += j.dump() + "\n";
  }
  return out;
}

std::string AblationTable::to_text() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-36s %-6s %8s %10s %6s %6s\n", "ablation", "toggle", "metric",
                "value", "final_loss", "seed", "steps");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-24s %-36s %-6s %8.4f %10.4f %6llu %6zu\n", r.name.c_str(),
                  r.toggle.c_str(), r.metric.c_str(), r.value, r.final_loss,
                  static_cast<unsigned long long>(r.seed), r.steps);
    out += line;
  }
  return out;
}

std::vector<HeadConfig> toggle_combinations(const HeadConfig& base) {
  std::vector<HeadConfig> out;
  for (bool aux : {true, false})
    for (bool text : {false, true})
      for (bool visual : {false, true})
        for (auto w : {WeightingMode::sig_affinity, WeightingMode::none})
          for (auto a : {AttentionMode::divided, AttentionMode::joint})
            for (auto c : {ClassifierMode::affinity, ClassifierMode::text_only, ClassifierMode::visual_only}) {
              HeadConfig h = base;
              h.use_aux = aux;
              h.substitute_backbone_text = text;
              h.substitute_backbone_visual = visual;
              h.weighting_mode = w;
              h.attention_mode = a;
              h.classifier_mode = c;
              out.push_back(h);
            }
  return out;
}

}  // namespace victr
