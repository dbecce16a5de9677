#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "victr/data/bundle.hpp"
#include "victr/eval/evaluate.hpp"
#include "victr/eval/train.hpp"
#include "victr/head/config.hpp"

namespace victr {

/// One named row of the switchboard: a single head.* key assignment applied
/// on top of the base config. The full model has no assignment.
struct AblationSpec {
  std::string name;
  std::string key;    // empty for the full model
  std::string value;

  [[nodiscard]] HeadConfig apply(HeadConfig base) const;
};

// "full" followed by the seven ablation rows, in table order.
const std::vector<AblationSpec>& standard_ablations();
// Throws UnknownAblationError.
const AblationSpec& find_ablation(std::string_view name);

/// Every combination of the binary switchboard toggles on top of `base`:
/// use_aux, both backbone substitutions, weighting (sig_affinity or none),
/// attention (divided or joint) and the three classifiers. 96 configs.
std::vector<HeadConfig> toggle_combinations(const HeadConfig& base);

struct AblationRow {
  std::string name;
  std::string toggle;  // "key=value" or "-"
  std::string metric;
  double value = 0.0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
};

struct AblationTable {
  std::vector<AblationRow> rows;

  [[nodiscard]] std::string to_jsonl() const;
  [[nodiscard]] std::string to_text() const;
};

/// Trains and evaluates every named row under the same training config and
/// data. An empty name list yields an empty table.
AblationTable run_ablation_suite(const std::vector<std::string>& names, const HeadConfig& base,
                                 const TrainConfig& train_cfg, const BundleCollection& train_set,
                                 const BundleCollection& test_set, const ViewOptions& views = {});

}  // namespace victr
