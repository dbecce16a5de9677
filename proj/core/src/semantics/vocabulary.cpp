#include "victr/semantics/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "victr/errors.hpp"

namespace victr {

namespace embedded {
std::optional<std::string_view> vocabulary_text(std::string_view stem);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::optional<std::size_t> find_category(const std::vector<std::string>& cats, std::string_view name) {
  auto it = std::find(cats.begin(), cats.end(), name);
  if (it == cats.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cats.begin());
}

constexpr std::string_view kCategoryTag = "#category:";
constexpr std::string_view kUseTag = "#use:";

}  // namespace

std::vector<std::size_t> AuxVocabulary::category_sizes() const {
  std::vector<std::size_t> sizes(categories.size(), 0);
  for (const auto& e : entries) {
    if (e.category < sizes.size()) ++sizes[e.category];
  }
  return sizes;
}

std::vector<std::size_t> AuxVocabulary::category_ids() const {
  std::vector<std::size_t> ids;
  ids.reserve(entries.size());
  for (const auto& e : entries) ids.push_back(e.category);
  return ids;
}

void AuxVocabulary::validate() const {
  if (categories.empty()) throw ParseError("vocabulary declares no categories");
  std::unordered_set<std::string> seen;
  for (const auto& c : categories) {
    if (c.empty()) throw ParseError("empty category name");
    if (!seen.insert(c).second) throw DuplicateEntryError("category '" + c + "' declared twice");
  }
  seen.clear();
  for (const auto& e : entries) {
    if (e.category >= categories.size()) {
      throw UnknownCategoryError("entry '" + e.text + "' has category id " +
                                 std::to_string(e.category) + " but only " +
                                 std::to_string(categories.size()) + " are declared");
    }
    if (e.text.empty()) throw ParseError("empty entry text");
    if (!seen.insert(e.text).second) throw DuplicateEntryError("duplicate entry '" + e.text + "'");
  }
}

AuxVocabulary load_vocabulary(std::string_view manifest) {
  AuxVocabulary v;
  std::optional<std::size_t> current;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= manifest.size()) {
    auto nl = manifest.find('\n', pos);
    if (nl == std::string_view::npos) nl = manifest.size();
    const auto line = trim(manifest.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (line.empty()) continue;
    if (line.starts_with(kCategoryTag)) {
      const auto name = std::string(trim(line.substr(kCategoryTag.size())));
      if (name.empty()) throw ParseError(where + "category header without a name");
      if (find_category(v.categories, name)) {
        throw DuplicateEntryError(where + "category '" + name + "' declared twice");
      }
      v.categories.push_back(name);
      current = v.categories.size() - 1;
    } else if (line.starts_with(kUseTag)) {
      const auto name = trim(line.substr(kUseTag.size()));
      current = find_category(v.categories, name);
      if (!current) throw UnknownCategoryError(where + "unknown category '" + std::string(name) + "'");
    } else if (line.front() == '#') {
      if (v.categories.empty()) v.preamble.emplace_back(line);
    } else {
      if (!current) throw ParseError(where + "entry before any category header");
      v.entries.push_back({std::string(line), *current});
    }
  }
  v.validate();
  return v;
}

AuxVocabulary load_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_vocabulary(ss.str());
}

std::string serialize(const AuxVocabulary& vocab) {
  vocab.validate();
  std::string out;
  for (const auto& c : vocab.preamble) out += c + "\n";
  std::size_t declared = 0;
  std::optional<std::size_t> current;
  auto declare_through = [&](std::size_t c) {
    while (declared <= c) {
      out += std::string(kCategoryTag) + vocab.categories[declared] + "\n";
      current = declared++;
    }
  };
  for (const auto& e : vocab.entries) {
    if (current != e.category) {
      if (e.category >= declared) {
        declare_through(e.category);
      } else {
        out += std::string(kUseTag) + vocab.categories[e.category] + "\n";
        current = e.category;
      }
    }
    out += e.text + "\n";
  }
  if (!vocab.categories.empty()) declare_through(vocab.categories.size() - 1);
  return out;
}

std::vector<std::string> shipped_vocabulary_names() { return {"charades", "kinetics", "kinetics_full"}; }

AuxVocabulary shipped_vocabulary(std::string_view name) {
  const auto text = embedded::vocabulary_text(name);
  if (!text) throw ConfigError("no shipped vocabulary named '" + std::string(name) + "'");
  return load_vocabulary(*text);
}

Tensor category_pool(const Tensor& aux, const AuxVocabulary& vocab) {
  if (aux.rows() != vocab.size() || (vocab.size() == 0 && !aux.empty())) {
    throw ShapeError("category_pool: " + std::to_string(aux.rows()) + " embeddings for " +
                     std::to_string(vocab.size()) + " vocabulary entries");
  }
  const auto k = vocab.n_categories();
  const auto d = aux.cols();
  Tensor out({k, d}, 0.0);
  const auto sizes = vocab.category_sizes();
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] == 0) throw ShapeError("category '" + vocab.categories[c] + "' has no members");
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto c = vocab.entries[i].category;
    for (std::size_t j = 0; j < d; ++j) out(c, j) += aux(i, j);
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) out(c, j) /= static_cast<double>(sizes[c]);
  }
  return out;
}

}  // namespace victr
