#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "victr/data/synthetic.hpp"
#include "victr/eval/evaluate.hpp"
#include "victr/eval/train.hpp"
#include "victr/head/config.hpp"

namespace victr::cli {

/// Everything a run depends on, addressed by flat sectioned keys:
///   head.*   HeadConfig fields
///   train.*  optimisation, sampling and view settings
///   data.*   synthetic data spec, plus data.vocabulary
///
/// Config text is one `key = value` per line; `#` starts a comment.
struct RunConfig {
  HeadConfig head;
  TrainConfig train;
  SyntheticSpec data;
  std::string vocabulary;  // shipped vocabulary name or manifest path; sets the aux layout
  std::size_t few_shot = 0;
  ViewOptions views;

  RunConfig();

  // Throws ConfigError for an undeclared key or a malformed value.
  void set(std::string_view key, std::string_view value);
  void apply_text(std::string_view text, std::string_view origin);

  // Canonical key/value list. train.threads is left out: it never changes
  // results.
  [[nodiscard]] std::vector<std::pair<std::string, std::string>> entries() const;
  [[nodiscard]] std::string canonical_text() const;
  // FNV-1a 64 of canonical_text().
  [[nodiscard]] std::uint64_t hash() const;

  // Resolves data.vocabulary into the synthetic aux layout and checks every
  // section.
  void finalize();
};

std::vector<std::string> preset_names();
// Throws ConfigError for an unknown preset.
std::string_view preset_text(std::string_view name);

std::vector<std::string> declared_keys();

}  // namespace victr::cli
