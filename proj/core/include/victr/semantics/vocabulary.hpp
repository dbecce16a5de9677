#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "victr/numerics/tensor.hpp"

namespace victr {

struct AuxEntry {
  std::string text;
  std::size_t category = 0;

  bool operator==(const AuxEntry&) const = default;
};

/// Fixed auxiliary prompt vocabulary grouped into k categories.
///
/// Manifest format, one item per line:
///   #category:<name>   declares a category and makes it current
///   #use:<name>        switches back to an already declared category
///   # anything else    comment
///   <prompt text>      entry in the current category
/// Blank lines are ignored and entries are trimmed.
struct AuxVocabulary {
  std::vector<std::string> categories;
  std::vector<AuxEntry> entries;
  // Comment lines seen before the first declaration; kept for serialize().
  std::vector<std::string> preamble;

  [[nodiscard]] std::size_t size() const noexcept { return entries.size(); }
  [[nodiscard]] std::size_t n_categories() const noexcept { return categories.size(); }
  [[nodiscard]] std::vector<std::size_t> category_sizes() const;
  [[nodiscard]] std::vector<std::size_t> category_ids() const;

  // Throws UnknownCategoryError / DuplicateEntryError / ParseError.
  void validate() const;

  bool operator==(const AuxVocabulary&) const = default;
};

AuxVocabulary load_vocabulary(std::string_view manifest);
AuxVocabulary load_vocabulary_file(const std::string& path);
std::string serialize(const AuxVocabulary& vocab);

// Names accepted by shipped_vocabulary(): "charades", "kinetics",
// "kinetics_full".
std::vector<std::string> shipped_vocabulary_names();
AuxVocabulary shipped_vocabulary(std::string_view name);

/// Per-category mean of the rows of `aux` (m x P). Categories with no
/// members throw ShapeError.
Tensor category_pool(const Tensor& aux, const AuxVocabulary& vocab);

}  // namespace victr
