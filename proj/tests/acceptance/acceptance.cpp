// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "properties.hpp"
#include "random_data.hpp"
#include "test_support.hpp"
#include "victr/data/bundle_file.hpp"
#include "victr/data/synthetic.hpp"
#include "victr/errors.hpp"
#include "victr/eval/ablation.hpp"
#include "victr/eval/evaluate.hpp"
#include "victr/eval/train.hpp"
#include "victr/head/checkpoint.hpp"
#include "victr/head/flops.hpp"
#include "victr/numerics/optim.hpp"
#include "victr/semantics/vocabulary.hpp"

using namespace victr;
using namespace victr::fixtures;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 60.0;
constexpr int kPropertyInstances = 200;
constexpr double kMapTolerance = 1e-12;
constexpr std::size_t kMapMaxVideos = 6;
constexpr std::size_t kMapClasses = 3;
constexpr double kOracleTolerance = 1e-10;
constexpr double kFlopTarget = 0.5e9;
constexpr double kFlopFactor = 2.0;
constexpr double kDeskMinTop1 = 0.95;
constexpr double kDeskMinMargin = 0.05;
constexpr double kDeskBudgetSeconds = 300.0;
constexpr std::size_t kDeskSteps = 300;
constexpr std::size_t kRoundTripBundles = 1000;
constexpr std::size_t kCharadesEntries = 97;
constexpr std::size_t kKineticsEntries = 88;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SyntheticSpec toy_data_spec() {
  SyntheticSpec s;
  s.n_classes = 3;
  s.n_train_per_class = 4;
  s.n_test_per_class = 2;
  s.frames = 2;
  s.dim = 8;
  s.separation_deg = 30;
  s.n_aux = 2;
  s.n_categories = 1;
  return s;
}

TrainConfig toy_train() {
  TrainConfig t;
  t.steps = 20;
  t.batch_size = 4;
  return t;
}

// Init weights are tiny; spread them so every block contributes curvature.
HeadParams gradcheck_params(const HeadConfig& config, std::uint64_t seed) {
  auto params = init_head_params(config, Rng(seed));
  Rng rng(seed + 1000);
  visit_params(params, [&](const std::string& name, Tensor& t) {
    if (name.find("weight") != std::string::npos) {
      for (auto& v : t.values()) v = 0.3 * rng.normal();
    }
  });
  return params;
}

Outcome criterion_gradients() {
  const auto data = generate_synthetic(toy_data_spec());
  const auto& video = data.items.front();
  const HeadConfig base = config_for_bank(toy_config(), *data.text);

  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t configs = 0;
  for (const auto& h : toggle_combinations(base)) {
    const auto r = check_head_gradients(h, gradcheck_params(h, configs), *data.text, video.frames, video.label,
                                        data.mode, 0.1);
    worst = std::max(worst, r.max_rel_error);
    ++configs;
  }
  const double elapsed = seconds_since(t0);

  // The extra weighting modes, outside the switchboard product.
  const auto t1 = Clock::now();
  double worst_extra = 0.0;
  std::size_t extra = 0;
  for (auto mode : {WeightingMode::learned_scalar, WeightingMode::attention}) {
    for (auto attn : {AttentionMode::divided, AttentionMode::joint}) {
      for (bool aux : {true, false}) {
        HeadConfig h = base;
        h.weighting_mode = mode;
        h.attention_mode = attn;
        h.use_aux = aux;
        const auto r = check_head_gradients(h, gradcheck_params(h, 500 + extra), *data.text, video.frames,
                                            video.label, data.mode, 0.1);
        worst_extra = std::max(worst_extra, r.max_rel_error);
        ++extra;
      }
    }
  }
  const double elapsed_extra = seconds_since(t1);

  const bool pass = configs == 96 && worst < kGradTolerance && elapsed < kGradBudgetSeconds &&
                    worst_extra < kGradTolerance;
  return {pass, fmt("%zu toggle combinations, max rel err %.2e (< %.0e) in %.1f s (< %.0f s); "
                    "%zu extra weighting configs, max rel err %.2e in %.1f s",
                    configs, worst, kGradTolerance, elapsed, kGradBudgetSeconds, extra, worst_extra, elapsed_extra)};
}

Outcome criterion_invariants() {
  struct Property {
    const char* name;
    std::function<std::string(Rng&)> check;
  };
  const Property props[] = {
      {"token count", prop_token_count},
      {"sig_affinity range", prop_sig_affinity_range},
      {"cosine scale invariance", prop_cosine_scale_invariance},
      {"class permutation", prop_class_permutation},
      {"cross-modal timestep independence", [](Rng& r) { return prop_group_independence(r, false); }},
      {"temporal token independence", [](Rng& r) { return prop_group_independence(r, true); }},
  };
  std::size_t passed = 0, total = 0;
  std::string first_failure;
  std::uint64_t seed = 100;
  for (const auto& p : props) {
    Rng root(seed++);
    for (int i = 0; i < kPropertyInstances; ++i) {
      Rng rng = root.fork(static_cast<std::uint64_t>(i));
      ++total;
      const auto failure = p.check(rng);
      if (failure.empty()) {
        ++passed;
      } else if (first_failure.empty()) {
        first_failure = std::string(p.name) + " #" + std::to_string(i) + ": " + failure;
      }
    }
  }
  return {passed == total,
          fmt("%zu properties x %d instances, %zu/%zu passed%s%s", std::size(props), kPropertyInstances, passed,
              total, first_failure.empty() ? "" : "; first failure: ", first_failure.c_str())};
}

Outcome criterion_oracles() {
  const auto sweep = exhaustive_map_sweep(kMapMaxVideos, kMapClasses, 7);

  // Adam: p=1, g=0.1, lr=0.01, default betas and eps, no decay.
  Tensor p = Tensor::scalar(1.0);
  const Tensor g = Tensor::scalar(0.1);
  AdamWConfig cfg;
  cfg.lr_max = 0.01;
  cfg.weight_decay = 0.0;
  const ParamRef refs[] = {{&p, &g, true}};
  auto state = make_optimizer_state(refs, cfg);
  adam_step(refs, state);
  const double m_hat = (1 - 0.9) * 0.1 / (1 - 0.9);
  const double v_hat = (1 - 0.999) * 0.01 / (1 - 0.999);
  const double adam_err = std::abs(p[0] - (1.0 - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8)));

  // Attention: two tokens, identity projections.
  const auto y = multi_head_self_attention(Tensor::matrix(2, 2, {1, 0, 0, 1}), identity_attention(2), 1);
  const double e = std::exp(1 / std::numbers::sqrt2);
  const double w = e / (e + 1);
  const double attn_err = std::max({std::abs(y(0, 0) - w), std::abs(y(0, 1) - (1 - w)), std::abs(y(1, 0) - (1 - w)),
                                    std::abs(y(1, 1) - w)});

  const bool pass = sweep.max_error <= kMapTolerance && adam_err <= kOracleTolerance && attn_err <= kOracleTolerance;
  return {pass, fmt("mAP vs brute force over %zu label patterns: max err %.1e (<= %.0e); "
                    "Adam err %.1e, attention err %.1e (<= %.0e)",
                    sweep.instances, sweep.max_error, kMapTolerance, adam_err, attn_err, kOracleTolerance)};
}

Outcome criterion_flops() {
  HeadConfig c;
  c.embed_dim = 512;
  c.num_heads = 8;
  c.num_layers = 4;
  c.proj_dim = 256;
  c.n_classes = 157;
  c.n_aux = 97;
  c.n_categories = 4;
  const std::uint64_t frames = 16;
  const auto divided = head_flops(c, frames);
  const double total = static_cast<double>(divided.total_flops());
  const double ratio = total / kFlopTarget;

  auto mixing = [&](const FlopReport& r) {
    return r.macs_with_prefix("layer0.cross_attention.mixing") + r.macs_with_prefix("layer0.temporal_attention.mixing") +
           r.macs_with_prefix("layer0.joint_attention.mixing");
  };
  HeadConfig joint_cfg = c;
  joint_cfg.attention_mode = AttentionMode::joint;
  const auto d_mix = mixing(head_flops(c, frames, FlopScope::full_video));
  const auto j_mix = mixing(head_flops(joint_cfg, frames, FlopScope::full_video));

  const bool pass = ratio <= kFlopFactor && ratio >= 1 / kFlopFactor && d_mix < j_mix;
  return {pass, fmt("B/16 preset %.3e FLOPs (%.2fx of %.1e, band x%.0f); attention mixing per layer divided %.3e < joint %.3e",
                    total, ratio, kFlopTarget, kFlopFactor, static_cast<double>(d_mix), static_cast<double>(j_mix))};
}

Outcome criterion_desk() {
  const SyntheticSpec spec;  // defaults: 10 classes, 40/10, D=32, T=8, seed 0
  const auto data = generate_synthetic(spec);
  const auto train_set = data.filter_split("train");
  const auto test_set = data.filter_split("test");

  HeadConfig head;
  head.embed_dim = 32;
  head.num_layers = 2;
  head.num_heads = 4;
  head.proj_dim = 32;
  head = config_for_bank(head, *data.text);
  TrainConfig cfg;
  cfg.steps = kDeskSteps;
  cfg.batch_size = 16;
  cfg.threads = 1;

  const auto t0 = Clock::now();
  const auto full = evaluate(head, train(head, train_set, cfg).params, test_set).value;
  const double full_s = seconds_since(t0);

  HeadConfig baseline = head;
  baseline.num_layers = 0;
  baseline.weighting_mode = WeightingMode::none;
  const auto t1 = Clock::now();
  const auto base = evaluate(baseline, train(baseline, train_set, cfg).params, test_set).value;
  const double base_s = seconds_since(t1);

  const bool pass = full >= kDeskMinTop1 && full - base >= kDeskMinMargin && full_s + base_s < kDeskBudgetSeconds;
  return {pass, fmt("%zu steps, 1 thread: full top-1 %.3f (>= %.2f) in %.1f s; L=0 unweighted baseline %.3f in %.1f s; "
                    "margin %.1f points (>= %.0f); total %.1f s (< %.0f s)",
                    kDeskSteps, full, kDeskMinTop1, full_s, base, base_s, 100 * (full - base), 100 * kDeskMinMargin,
                    full_s + base_s, kDeskBudgetSeconds)};
}

Outcome criterion_ablation() {
  const auto data = generate_synthetic(toy_data_spec());
  const HeadConfig base = config_for_bank(toy_config(), *data.text);
  std::vector<std::string> names;
  for (const auto& r : standard_ablations()) names.push_back(r.name);
  const auto table = run_ablation_suite(names, base, toy_train(), data.filter_split("train"), data.filter_split("test"));

  bool complete = table.rows.size() == names.size();
  for (const auto& row : table.rows) {
    complete = complete && std::isfinite(row.value) && std::isfinite(row.final_loss) && !row.metric.empty();
  }
  const std::string text = table.to_text();
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  complete = complete && lines == names.size() + 1;

  auto diff_keys = [&](const char* name) {
    const auto a = to_entries(base);
    const auto b = to_entries(find_ablation(name).apply(base));
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].second != b[i].second) keys.push_back(a[i].first);
    return keys;
  };
  const auto w = diff_keys("No Affinity weighting");
  const auto j = diff_keys("w/ joint-attention");
  const bool single = w == std::vector<std::string>{"weighting_mode"} && j == std::vector<std::string>{"attention_mode"};

  return {complete && single,
          fmt("%zu ablation rows + full model ran on the toy preset, table %s; "
              "'No Affinity weighting' differs in %zu toggle (%s), 'w/ joint-attention' in %zu (%s)",
              names.size() - 1, complete ? "complete" : "INCOMPLETE", w.size(), w.empty() ? "-" : w[0].c_str(),
              j.size(), j.empty() ? "-" : j[0].c_str())};
}

Outcome criterion_data() {
  Rng rng(2024);
  std::size_t bundles = 0, files = 0;
  bool lossless = true;
  while (bundles < kRoundTripBundles) {
    const auto c = random_collection(rng, std::min<std::size_t>(1 + rng.below(40), kRoundTripBundles - bundles));
    const auto bytes = encode_bundles(c);
    const auto back = decode_bundles(bytes);
    lossless = lossless && same_collection(c, back) && encode_bundles(back) == bytes;
    bundles += c.items.size();
    ++files;
  }

  // One good file, corrupted three ways.
  const auto good = encode_bundles(random_collection(rng, 5));
  auto classify = [](std::vector<std::uint8_t> bytes) -> std::string {
    try {
      decode_bundles(bytes);
      return "none";
    } catch (const MagicMismatchError&) {
      return "MagicMismatchError";
    } catch (const TruncationError&) {
      return "TruncationError";
    } catch (const ChecksumError&) {
      return "ChecksumError";
    } catch (const std::exception&) {
      return "other";
    }
  };
  auto magic = good;
  magic[0] ^= 0xFF;
  auto truncated = good;
  truncated.resize(good.size() - 9);
  auto flipped = good;
  flipped[good.size() - 7] ^= 0x01;
  const auto e_magic = classify(magic), e_len = classify(truncated), e_crc = classify(flipped);
  const bool distinct = e_magic == "MagicMismatchError" && e_len == "TruncationError" && e_crc == "ChecksumError";

  const auto charades = shipped_vocabulary("charades");
  const auto kinetics = shipped_vocabulary("kinetics");
  const bool vocab = charades.size() == kCharadesEntries &&
                     charades.category_sizes() == std::vector<std::size_t>{43, 15, 5, 34} &&
                     kinetics.size() == kKineticsEntries && kinetics.category_sizes() == std::vector<std::size_t>{40, 43, 5};

  return {lossless && distinct && vocab,
          fmt("%zu random bundles in %zu files round-trip %s; corruption -> magic:%s length:%s crc:%s; "
              "vocabularies charades %zu, kinetics %zu",
              bundles, files, lossless ? "bitwise" : "LOSSY", e_magic.c_str(), e_len.c_str(), e_crc.c_str(),
              charades.size(), kinetics.size())};
}

Outcome criterion_determinism() {
  const auto data = generate_synthetic(toy_data_spec());
  const HeadConfig head = config_for_bank(toy_config(), *data.text);
  auto cfg = toy_train();
  const auto a = encode_checkpoint(head, train(head, data.filter_split("train"), cfg).params);
  const auto b = encode_checkpoint(head, train(head, data.filter_split("train"), cfg).params);
  cfg.threads = 4;
  const auto c = encode_checkpoint(head, train(head, data.filter_split("train"), cfg).params);
  return {a == b && a == c, fmt("two seeded runs %s (%zu bytes); 4-thread run %s",
                                a == b ? "bitwise identical" : "DIFFER", a.size(), a == c ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
  report(1, "gradient fidelity", criterion_gradients);
  report(2, "structural invariants", criterion_invariants);
  report(3, "oracle equivalence", criterion_oracles);
  report(4, "FLOP calibration", criterion_flops);
  report(5, "desk-scale learning", criterion_desk);
  report(6, "ablation switchboard", criterion_ablation);
  report(7, "data integrity", criterion_data);
  report(8, "determinism", criterion_determinism);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
