#include "commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "victr/data/bundle_file.hpp"
#include "victr/data/sampling.hpp"
#include "victr/errors.hpp"
#include "victr/eval/ablation.hpp"
#include "victr/head/checkpoint.hpp"
#include "victr/head/flops.hpp"
#include "victr/head/head.hpp"
#include "victr/io/binary.hpp"
#include "victr/version.hpp"

namespace victr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kShapeOrConfig;
  if (dynamic_cast<const ZeroNormError*>(&e) || dynamic_cast<const NonFiniteError*>(&e) ||
      dynamic_cast<const DivergenceError*>(&e)) {
    return kNumeric;
  }
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const SpecError*>(&e) ||
      dynamic_cast<const IoError*>(&e)) {
    return kData;
  }
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DuplicateEntryError*>(&e) ||
      dynamic_cast<const UnknownCategoryError*>(&e)) {
    return kVocabulary;
  }
  if (dynamic_cast<const InsufficientClipsError*>(&e) || dynamic_cast<const RangeError*>(&e)) return kSampling;
  if (dynamic_cast<const LabelError*>(&e) || dynamic_cast<const DegenerateClassError*>(&e) ||
      dynamic_cast<const UnknownAblationError*>(&e)) {
    return kEvaluation;
  }
  return kInternal;
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg;
  if (!opts.preset.empty()) cfg.apply_text(preset_text(opts.preset), "preset " + opts.preset);
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw IoError("cannot open config '" + opts.config_path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    cfg.apply_text(text, opts.config_path);
  }
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (opts.seed) {
    cfg.train.seed = *opts.seed;
    cfg.data.seed = *opts.seed;
  }
  cfg.finalize();
  return cfg;
}

namespace {

std::string hex(std::uint64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*" PRIx64, width, v);
  return buf;
}

std::string in_dir(const CommonOptions& common, const std::string& name) {
  return (fs::path(common.out_dir) / name).string();
}

void ensure_dir(const CommonOptions& common) {
  std::error_code ec;
  fs::create_directories(common.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + common.out_dir + "'");
}

// Whole-file CRC32 is useless here: every sealed file ends in its own CRC,
// which drives the register to the same residue.
std::uint64_t fnv1a64(std::span<const std::uint8_t> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ordered_json file_record(const std::string& path) {
  const auto bytes = io::read_file(path);
  ordered_json j;
  j["path"] = path;
  j["bytes"] = bytes.size();
  j["fnv1a64"] = hex(fnv1a64(bytes), 16);
  return j;
}

/// Records what a run depended on; contains no timestamps or host names.
class Manifest {
 public:
  Manifest(std::string subcommand, const RunConfig& cfg) : subcommand_(std::move(subcommand)) {
    j_["tool"] = "victr";
    j_["subcommand"] = subcommand_;
    j_["seed"] = {{"train", cfg.train.seed}, {"data", cfg.data.seed}};
    j_["config_hash"] = "fnv1a64:" + hex(cfg.hash(), 16);
    ordered_json c = ordered_json::object();
    for (const auto& [k, v] : cfg.entries()) c[k] = v;
    j_["config"] = c;
    j_["inputs"] = ordered_json::array();
    j_["outputs"] = ordered_json::array();
    j_["versions"] = {{"victr", kVersion},
                      {"bundle_format", kBundleFormatVersion},
                      {"checkpoint_format", kCheckpointVersion},
                      {"compiler", kCompiler},
                      {"cxx_standard", static_cast<long>(__cplusplus)}};
  }

  void input(const std::string& path) { j_["inputs"].push_back(file_record(path)); }
  void output(const std::string& path) { j_["outputs"].push_back(file_record(path)); }

  void write(const CommonOptions& common) const {
    const auto path = in_dir(common, subcommand_ + ".manifest.json");
    const auto text = j_.dump(2) + "\n";
    io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

 private:
  std::string subcommand_;
  ordered_json j_;
};

void write_text(const std::string& path, const std::string& text) {
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

BundleCollection load_data(const RunConfig& cfg, const std::string& path, Manifest& manifest) {
  if (path.empty()) return generate_synthetic(cfg.data);
  manifest.input(path);
  return read_bundle_file(path);
}

BundleCollection training_split(const RunConfig& cfg, const BundleCollection& data) {
  auto train_set = data.filter_split("train");
  if (cfg.few_shot > 0) train_set = few_shot_sample(train_set, cfg.few_shot, cfg.train.seed);
  return train_set;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int run_synth(const CommonOptions& common, const SynthOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("synth", cfg);
  const auto data = generate_synthetic(cfg.data);
  const auto path = opts.out.empty() ? in_dir(common, "bundles.vctr") : opts.out;
  write_bundle_file(path, data);
  manifest.output(path);
  manifest.write(common);
  out << "wrote " << data.items.size() << " bundles (n=" << data.text->n_classes() << ", m=" << data.text->n_aux()
      << ", k=" << data.text->n_categories << ", D=" << data.text->dim() << ") to " << path << "\n";
  return kOk;
}

int run_train(const CommonOptions& common, const TrainOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("train", cfg);
  const auto data = load_data(cfg, opts.data, manifest);
  const auto train_set = training_split(cfg, data);
  const auto test_set = data.filter_split("test");
  const HeadConfig head = config_for_bank(cfg.head, *data.text);
  head.validate();

  EvalHook hook;
  std::string metric = "top1";
  if (!test_set.items.empty()) {
    hook = [&](std::size_t, const HeadParams& p) {
      auto r = evaluate(head, p, test_set, cfg.views);
      metric = r.metric;
      return r.value;
    };
  }
  const auto result = train(head, train_set, cfg.train, hook);

  const auto ck_path = opts.checkpoint.empty() ? in_dir(common, "checkpoint.vckp") : opts.checkpoint;
  save_checkpoint(ck_path, head, result.params);
  std::string jsonl;
  for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
    jsonl += ordered_json{{"kind", "step"}, {"step", i + 1}, {"loss", result.loss_trace[i]}}.dump() + "\n";
  }
  for (const auto& e : result.eval_trace) {
    jsonl += ordered_json{{"kind", "eval"}, {"split", "test"}, {"step", e.step}, {"metric", metric}, {"value", e.metric}}
                 .dump() +
             "\n";
  }
  const auto metrics_path = in_dir(common, "train_metrics.jsonl");
  write_text(metrics_path, jsonl);
  manifest.output(ck_path);
  manifest.output(metrics_path);
  manifest.write(common);

  out << "trained " << cfg.train.steps << " steps on " << train_set.items.size() << " videos";
  if (!result.loss_trace.empty()) out << ", final loss " << fmt(result.loss_trace.back());
  out << "\n";
  if (!result.eval_trace.empty()) out << "test " << metric << " " << fmt(result.eval_trace.back().metric) << "\n";
  out << "checkpoint " << ck_path << "\n";
  return kOk;
}

int run_eval(const CommonOptions& common, const EvalOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("eval", cfg);
  manifest.input(opts.checkpoint);
  const auto ck = load_checkpoint(opts.checkpoint);
  const auto data = load_data(cfg, opts.data, manifest);
  auto subset = data.filter_split(opts.split);
  if (subset.items.empty()) throw ShapeError("no videos in split '" + opts.split + "'");
  const auto r = evaluate(ck.config, ck.params, subset, cfg.views);

  ordered_json j{{"kind", "eval"}, {"split", opts.split}, {"metric", r.metric}, {"value", r.value},
                 {"videos", subset.items.size()}, {"views", cfg.views.n_views}};
  if (!r.skipped_classes.empty()) j["skipped_classes"] = r.skipped_classes;
  const auto path = in_dir(common, "eval_metrics.jsonl");
  write_text(path, j.dump() + "\n");
  manifest.output(path);
  manifest.write(common);
  out << opts.split << " " << r.metric << " " << fmt(r.value) << " over " << subset.items.size() << " videos\n";
  if (!r.skipped_classes.empty()) out << r.skipped_classes.size() << " classes without positives skipped\n";
  return kOk;
}

int run_zeroshot(const CommonOptions& common, const ZeroShotOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("zeroshot", cfg);
  manifest.input(opts.checkpoint);
  const auto ck = load_checkpoint(opts.checkpoint);
  std::vector<BundleCollection> splits;
  std::vector<std::string> names;
  for (const auto& path : opts.data) {
    names.push_back(path);
    manifest.input(path);
    auto all = read_bundle_file(path);
    auto subset = all.filter_split(opts.split);
    splits.push_back(subset.items.empty() ? std::move(all) : std::move(subset));
  }
  if (splits.empty()) {
    // Three synthetic splits whose class embeddings come from unseen seeds.
    for (std::uint64_t s = 1; s <= 3; ++s) {
      SyntheticSpec spec = cfg.data;
      spec.seed = cfg.data.seed + s;
      splits.push_back(generate_synthetic(spec).filter_split(opts.split));
      names.push_back("synthetic:seed=" + std::to_string(spec.seed));
    }
  }
  const auto report = zero_shot_eval(ck.config, ck.params, splits, cfg.views);

  std::string jsonl;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    jsonl += ordered_json{{"kind", "zeroshot_split"}, {"split", i}, {"data", names[i]},
                          {"n_classes", splits[i].text->n_classes()}, {"value", report.per_split[i]}}
                 .dump() +
             "\n";
    out << "split " << i << " (" << names[i] << "): " << fmt(report.per_split[i]) << "\n";
  }
  jsonl += ordered_json{{"kind", "zeroshot_summary"}, {"mean", report.summary.mean}, {"std", report.summary.std}}
               .dump() +
           "\n";
  const auto path = in_dir(common, "zeroshot_metrics.jsonl");
  write_text(path, jsonl);
  manifest.output(path);
  manifest.write(common);
  out << "mean " << fmt(report.summary.mean) << " +/- " << fmt(report.summary.std) << "\n";
  return kOk;
}

int run_ablate(const CommonOptions& common, const AblateOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("ablate", cfg);
  std::vector<std::string> rows = opts.rows;
  if (rows.empty()) {
    for (const auto& spec : standard_ablations()) rows.push_back(spec.name);
  }
  for (const auto& r : rows) find_ablation(r);
  const auto data = load_data(cfg, opts.data, manifest);
  const auto table = run_ablation_suite(rows, cfg.head, cfg.train, training_split(cfg, data),
                                        data.filter_split("test"), cfg.views);
  const auto jsonl_path = in_dir(common, "ablation.jsonl");
  const auto text_path = in_dir(common, "ablation.txt");
  write_text(jsonl_path, table.to_jsonl());
  write_text(text_path, table.to_text());
  manifest.output(jsonl_path);
  manifest.output(text_path);
  manifest.write(common);
  out << table.to_text();
  return kOk;
}

int run_gradcheck(const CommonOptions& common, const GradCheckOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("gradcheck", cfg);
  const auto data = generate_synthetic(cfg.data);
  const auto& video = data.items.front();
  const HeadConfig base = config_for_bank(cfg.head, *data.text);
  base.validate();

  const std::vector<HeadConfig> configs =
      opts.all_toggles ? toggle_combinations(base) : std::vector<HeadConfig>{base};

  double worst = 0.0;
  std::size_t coordinates = 0;
  std::string jsonl;
  for (const auto& h : configs) {
    const auto params = init_head_params(h, Rng(cfg.train.seed));
    const auto r = check_head_gradients(h, params, *data.text, video.frames, video.label, data.mode,
                                        cfg.train.aux_weight);
    worst = std::max(worst, r.max_rel_error);
    coordinates += r.coordinates;
    ordered_json j{{"kind", "gradcheck"}, {"max_rel_error", r.max_rel_error}, {"coordinates", r.coordinates}};
    for (const auto& [k, v] : to_entries(h)) j["head." + k] = v;
    jsonl += j.dump() + "\n";
  }
  const auto path = in_dir(common, "gradcheck.jsonl");
  write_text(path, jsonl);
  manifest.output(path);
  manifest.write(common);
  char line[160];
  std::snprintf(line, sizeof line, "max relative error %.3e over %zu coordinates in %zu configuration(s)\n", worst,
                coordinates, configs.size());
  out << line;
  if (worst > opts.tolerance) {
    out << "FAIL: exceeds tolerance " << opts.tolerance << "\n";
    return kGradCheckFailed;
  }
  out << "PASS\n";
  return kOk;
}

int run_flops(const CommonOptions& common, const FlopsOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(common);
  ensure_dir(common);
  Manifest manifest("flops", cfg);
  FlopScope scope;
  if (opts.scope == "single_logit") scope = FlopScope::single_logit;
  else if (opts.scope == "full_video") scope = FlopScope::full_video;
  else throw ConfigError("--scope must be single_logit or full_video");
  FlopConvention conv;
  if (opts.convention == "mac") conv = FlopConvention::mac_as_one;
  else if (opts.convention == "mul_add") conv = FlopConvention::mac_as_two;
  else throw ConfigError("--convention must be mac or mul_add");

  const auto report = head_flops(cfg.head, cfg.data.frames, scope, conv);
  std::string jsonl;
  char line[160];
  for (const auto& item : report.items) {
    std::snprintf(line, sizeof line, "%-40s %16" PRIu64 "\n", item.block.c_str(), report.flops(item));
    out << line;
    jsonl += ordered_json{{"kind", "flops"}, {"block", item.block}, {"flops", report.flops(item)}}.dump() + "\n";
  }
  std::snprintf(line, sizeof line, "%-40s %16" PRIu64 "\n", "total", report.total_flops());
  out << line;
  jsonl += ordered_json{{"kind", "flops_total"}, {"scope", opts.scope}, {"convention", opts.convention},
                        {"frames", cfg.data.frames}, {"flops", report.total_flops()}}
               .dump() +
           "\n";
  const auto path = in_dir(common, "flops.jsonl");
  write_text(path, jsonl);
  manifest.output(path);
  manifest.write(common);
  return kOk;
}

}  // namespace victr::cli
