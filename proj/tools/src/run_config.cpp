#include "run_config.hpp"

#include <algorithm>
#include <optional>

#include "victr/errors.hpp"
#include "victr/semantics/vocabulary.hpp"
#include "victr/util/parse.hpp"

namespace victr::cli {

namespace embedded {
std::optional<std::string_view> preset_text(std::string_view stem);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::string b(bool v) { return v ? "true" : "false"; }

}  // namespace

RunConfig::RunConfig() { train.threads = default_thread_count(); }

void RunConfig::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  if (key.starts_with("head.")) {
    set_entry(head, key.substr(5), value);
    return;
  }
  auto& t = train;
  auto& d = data;
  if (k == "train.steps") t.steps = parse_size(value, k);
  else if (k == "train.batch_size") t.batch_size = parse_size(value, k);
  else if (k == "train.lr_max") t.lr_max = parse_double(value, k);
  else if (k == "train.lr_min") t.lr_min = parse_double(value, k);
  else if (k == "train.weight_decay") t.weight_decay = parse_double(value, k);
  else if (k == "train.aux_weight") t.aux_weight = parse_double(value, k);
  else if (k == "train.seed") t.seed = parse_u64(value, k);
  else if (k == "train.eval_every") t.eval_every = parse_size(value, k);
  else if (k == "train.threads") t.threads = parse_size(value, k);
  else if (k == "train.few_shot_k") few_shot = parse_size(value, k);
  else if (k == "train.n_views") views.n_views = parse_size(value, k);
  else if (k == "train.frames_per_view") views.frames_per_view = parse_size(value, k);
  else if (k == "data.n_classes") d.n_classes = parse_size(value, k);
  else if (k == "data.n_train_per_class") d.n_train_per_class = parse_size(value, k);
  else if (k == "data.n_test_per_class") d.n_test_per_class = parse_size(value, k);
  else if (k == "data.frames") d.frames = parse_size(value, k);
  else if (k == "data.dim") d.dim = parse_size(value, k);
  else if (k == "data.separation_deg") d.separation_deg = parse_double(value, k);
  else if (k == "data.noise") d.noise = parse_double(value, k);
  else if (k == "data.drift") d.drift = parse_double(value, k);
  else if (k == "data.n_aux") d.n_aux = parse_size(value, k);
  else if (k == "data.n_categories") d.n_categories = parse_size(value, k);
  else if (k == "data.multi_label") d.multi_label = parse_bool(value, k);
  else if (k == "data.seed") d.seed = parse_u64(value, k);
  else if (k == "data.vocabulary") vocabulary = std::string(value);
  else throw ConfigError("undeclared config key '" + k + "'");
}

void RunConfig::apply_text(std::string_view text, std::string_view origin) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& [k, v] : to_entries(head)) out.emplace_back("head." + k, v);
  const auto& t = train;
  out.insert(out.end(), {
      {"train.steps", std::to_string(t.steps)},
      {"train.batch_size", std::to_string(t.batch_size)},
      {"train.lr_max", format_double(t.lr_max)},
      {"train.lr_min", format_double(t.lr_min)},
      {"train.weight_decay", format_double(t.weight_decay)},
      {"train.aux_weight", format_double(t.aux_weight)},
      {"train.seed", std::to_string(t.seed)},
      {"train.eval_every", std::to_string(t.eval_every)},
      {"train.few_shot_k", std::to_string(few_shot)},
      {"train.n_views", std::to_string(views.n_views)},
      {"train.frames_per_view", std::to_string(views.frames_per_view)},
  });
  const auto& d = data;
  out.insert(out.end(), {
      {"data.n_classes", std::to_string(d.n_classes)},
      {"data.n_train_per_class", std::to_string(d.n_train_per_class)},
      {"data.n_test_per_class", std::to_string(d.n_test_per_class)},
      {"data.frames", std::to_string(d.frames)},
      {"data.dim", std::to_string(d.dim)},
      {"data.separation_deg", format_double(d.separation_deg)},
      {"data.noise", format_double(d.noise)},
      {"data.drift", format_double(d.drift)},
      {"data.n_aux", std::to_string(d.n_aux)},
      {"data.n_categories", std::to_string(d.n_categories)},
      {"data.multi_label", b(d.multi_label)},
      {"data.seed", std::to_string(d.seed)},
      {"data.vocabulary", vocabulary},
  });
  return out;
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void RunConfig::finalize() {
  if (!vocabulary.empty()) {
    const auto names = shipped_vocabulary_names();
    const bool shipped = std::find(names.begin(), names.end(), vocabulary) != names.end();
    const auto vocab = shipped ? shipped_vocabulary(vocabulary) : load_vocabulary_file(vocabulary);
    data.n_aux = vocab.size();
    data.n_categories = vocab.n_categories();
    data.aux_categories = vocab.category_ids();
  } else {
    data.aux_categories.clear();
  }
  head.validate();
  train.validate();
  data.validate();
}

std::vector<std::string> preset_names() { return {"toy", "desk", "b16-charades", "l14-kinetics"}; }

std::string_view preset_text(std::string_view name) {
  if (auto text = embedded::preset_text(name)) return *text;
  std::string known;
  for (const auto& p : preset_names()) known += (known.empty() ? "" : ", ") + p;
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: " + known + ")");
}

std::vector<std::string> declared_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : RunConfig().entries()) keys.push_back(k);
  keys.push_back("train.threads");
  return keys;
}

}  // namespace victr::cli
