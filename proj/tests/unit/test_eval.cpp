#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "test_support.hpp"
#include "victr/data/sampling.hpp"
#include "victr/data/synthetic.hpp"
#include "victr/errors.hpp"
#include "victr/eval/ablation.hpp"
#include "victr/eval/evaluate.hpp"
#include "victr/eval/metrics.hpp"
#include "victr/eval/train.hpp"
#include "victr/head/checkpoint.hpp"

using namespace victr;
using namespace victr::fixtures;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_classes = 4;
  s.n_train_per_class = 6;
  s.n_test_per_class = 3;
  s.frames = 3;
  s.dim = 8;
  s.n_aux = 4;
  s.n_categories = 2;
  return s;
}

HeadConfig small_head(const BundleCollection& data) {
  HeadConfig c;
  c.embed_dim = 8;
  c.num_layers = 1;
  c.num_heads = 2;
  c.proj_dim = 8;
  return config_for_bank(c, *data.text);
}

TrainConfig short_train(std::size_t steps = 10) {
  TrainConfig t;
  t.steps = steps;
  t.batch_size = 4;
  return t;
}

// Keeps the listed classes, relabelled 0..k-1, with their class text.
BundleCollection class_subset(const BundleCollection& data, const std::vector<std::size_t>& classes) {
  auto bank = std::make_shared<TextBank>(*data.text);
  bank->class_text = Tensor({classes.size(), data.text->dim()});
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::copy_n(data.text->class_text.row(classes[i]).begin(), data.text->dim(), bank->class_text.row(i).begin());
  }
  BundleCollection out{data.mode, bank, {}};
  for (const auto& b : data.items) {
    const auto y = std::get<std::size_t>(b.label);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (classes[i] != y) continue;
      auto copy = b;
      copy.label = i;
      copy.text = bank;
      out.items.push_back(copy);
    }
  }
  return out;
}

}  // namespace

TEST(Metrics, Top1) {
  const Tensor s = Tensor::matrix(3, 2, {0.9, 0.1, 0.2, 0.8, 0.6, 0.4});
  const std::size_t all[] = {0, 1, 0}, none[] = {1, 0, 1}, two[] = {0, 1, 1};
  EXPECT_EQ(top1_accuracy(s, all), 1.0);
  EXPECT_EQ(top1_accuracy(s, none), 0.0);
  EXPECT_NEAR(top1_accuracy(s, two), 2.0 / 3.0, 1e-15);
  const std::size_t bad[] = {0, 5, 0};
  EXPECT_THROW(top1_accuracy(s, bad), LabelError);
  const std::size_t short_list[] = {0};
  EXPECT_THROW(top1_accuracy(s, short_list), LabelError);
}

TEST(Metrics, ArgmaxTiesGoLow) {
  const double s[] = {1.0, 3.0, 3.0};
  EXPECT_EQ(argmax(s), 1u);
}

TEST(Metrics, AveragePrecision) {
  const double scores[] = {0.9, 0.8, 0.7};
  const std::uint8_t pos[] = {1, 0, 1};
  EXPECT_NEAR(average_precision(scores, pos), (1.0 + 2.0 / 3.0) / 2, 1e-15);
  EXPECT_NEAR(average_precision(scores, pos), 0.8333, 1e-4);
  const std::uint8_t perfect[] = {1, 1, 0};
  EXPECT_EQ(average_precision(scores, perfect), 1.0);
  const std::uint8_t none[] = {0, 0, 0};
  EXPECT_EQ(average_precision(scores, none), -1.0);
}

TEST(Metrics, MeanAveragePrecision) {
  const Tensor s = Tensor::matrix(3, 3, {0.9, 0.1, 0.2,  //
                                         0.2, 0.7, 0.1,  //
                                         0.1, 0.2, 0.3});
  auto r = mean_average_precision(s, {{1, 0, 0}, {0, 1, 0}, {0, 0, 0}});
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.skipped, (std::vector<std::size_t>{2}));
  EXPECT_THROW(mean_average_precision(s, {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}), DegenerateClassError);
  EXPECT_THROW(mean_average_precision(s, {{1, 0}}), LabelError);
}

TEST(Metrics, MeanStd) {
  const double same[] = {0.4, 0.4, 0.4};
  EXPECT_EQ(mean_std(same).std, 0.0);
  const double v[] = {1, 3};
  EXPECT_EQ(mean_std(v).mean, 2.0);
  EXPECT_EQ(mean_std(v).std, 1.0);
}

TEST(Train, ZeroStepsKeepsInitialization) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto r = train(head, data.filter_split("train"), short_train(0));
  EXPECT_EQ(encode_checkpoint(head, r.params), encode_checkpoint(head, init_head_params(head, Rng(0))));
  EXPECT_TRUE(r.loss_trace.empty());
}

TEST(Train, LossDecreases) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto cfg = short_train(60);
  auto r = train(head, data.filter_split("train"), cfg);
  ASSERT_EQ(r.loss_trace.size(), 60u);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    first += r.loss_trace[i];
    last += r.loss_trace[50 + i];
  }
  EXPECT_LT(last, first);
}

TEST(Train, DeterministicAcrossRunsAndThreads) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto cfg = short_train(8);
  const auto a = encode_checkpoint(head, train(head, data, cfg).params);
  const auto b = encode_checkpoint(head, train(head, data, cfg).params);
  cfg.threads = 3;
  const auto c = encode_checkpoint(head, train(head, data, cfg).params);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
  cfg.seed = 1;
  EXPECT_NE(a, encode_checkpoint(head, train(head, data, cfg).params));
}

TEST(Train, EvalHookSchedule) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto cfg = short_train(10);
  cfg.eval_every = 4;
  std::vector<std::size_t> steps;
  auto r = train(head, data, cfg, [&](std::size_t step, const HeadParams&) {
    steps.push_back(step);
    return 0.5;
  });
  EXPECT_EQ(steps, (std::vector<std::size_t>{4, 8, 10}));
  EXPECT_EQ(r.eval_trace.size(), 3u);
}

TEST(Train, InvalidConfig) {
  auto data = generate_synthetic(small_spec());
  auto cfg = short_train();
  cfg.batch_size = 0;
  EXPECT_THROW(train(small_head(data), data, cfg), ConfigError);
  cfg = short_train();
  cfg.lr_min = 1.0;
  EXPECT_THROW(train(small_head(data), data, cfg), ConfigError);
}

TEST(Train, DivergenceIsReported) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto init = init_head_params(head, Rng(0));
  init.projection.weight[0] = std::nan("");
  EXPECT_THROW(train(head, init, data, short_train(2)), DivergenceError);
}

TEST(Evaluate, SingleAndMultiLabel) {
  auto spec = small_spec();
  auto data = generate_synthetic(spec);
  auto head = small_head(data);
  auto params = init_head_params(head, Rng(0));
  auto r = evaluate(head, params, data.filter_split("test"));
  EXPECT_EQ(r.metric, "top1");
  EXPECT_EQ(r.scores.rows(), 12u);
  spec.multi_label = true;
  auto ml = generate_synthetic(spec);
  auto m = evaluate(head, params, ml.filter_split("test"));
  EXPECT_EQ(m.metric, "mAP");
  EXPECT_GE(m.value, 0.0);
  EXPECT_LE(m.value, 1.0);
}

TEST(Evaluate, ViewsAverageLogits) {
  auto spec = small_spec();
  spec.frames = 8;
  auto data = generate_synthetic(spec);
  auto head = small_head(data);
  auto params = init_head_params(head, Rng(2));
  const auto& video = data.items[0];
  auto fused = video_scores(head, params, video, {2, 4});
  auto v0 = video_scores(head, params, multi_view_split(video, 2, 4)[0]);
  auto v1 = video_scores(head, params, multi_view_split(video, 2, 4)[1]);
  for (std::size_t i = 0; i < fused.size(); ++i) EXPECT_NEAR(fused[i], (v0[i] + v1[i]) / 2, 1e-12);
  EXPECT_THROW(video_scores(head, params, video, {1, 16}), RangeError);
}

TEST(ZeroShot, SameVocabularyMatchesEval) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto params = init_head_params(head, Rng(1));
  auto test = data.filter_split("test");
  auto zs = zero_shot_eval(head, params, {test});
  EXPECT_EQ(zs.per_split[0], evaluate(head, params, test).value);
  auto triple = zero_shot_eval(head, params, {test, test, test});
  EXPECT_EQ(triple.summary.std, 0.0);
}

TEST(ZeroShot, WidthMismatch) {
  auto data = generate_synthetic(small_spec());
  auto head = small_head(data);
  auto params = init_head_params(head, Rng(1));
  auto spec = small_spec();
  spec.dim = 12;
  EXPECT_THROW(zero_shot_eval(head, params, {generate_synthetic(spec)}), ShapeError);
}

// Half drift: with full drift a video spans u_c..u_{c+1} and, lacking
// positional information, the head cannot tell which end names the class.
TEST(ZeroShot, TransfersToHeldOutClasses) {
  SyntheticSpec spec;
  spec.drift = 0.5;
  spec.n_train_per_class = 12;
  spec.n_test_per_class = 10;
  auto data = generate_synthetic(spec);
  auto seen = class_subset(data.filter_split("train"), {0, 1, 2, 3, 4, 5, 6, 7});
  auto unseen = class_subset(data.filter_split("test"), {8, 9});
  HeadConfig head;
  head.embed_dim = 32;
  head.num_layers = 1;
  head.num_heads = 4;
  head.proj_dim = 32;
  head = config_for_bank(head, *seen.text);
  TrainConfig cfg;
  cfg.steps = 80;
  cfg.batch_size = 8;
  auto trained = train(head, seen, cfg);
  auto zs = zero_shot_eval(head, trained.params, {unseen});
  EXPECT_GT(zs.per_split[0], 0.5);
}

TEST(Checkpoint, RoundTripAndCorruption) {
  auto c = toy_config();
  auto params = init_head_params(c, Rng(3));
  const auto bytes = encode_checkpoint(c, params);
  auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.config, c);
  EXPECT_EQ(encode_checkpoint(back.config, back.params), bytes);

  auto bad = bytes;
  bad[0] = 'Z';
  EXPECT_THROW(decode_checkpoint(bad), MagicMismatchError);
  bad = bytes;
  bad[bytes.size() / 2] ^= 1;
  EXPECT_THROW(decode_checkpoint(bad), ChecksumError);
  bad = bytes;
  bad.resize(bytes.size() / 2);
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  bad = bytes;
  bad[4] = 7;
  EXPECT_THROW(decode_checkpoint(bad), VersionError);
}

TEST(Ablation, StandardRows) {
  const auto& rows = standard_ablations();
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0].name, "full");
  const HeadConfig base = toy_config();
  auto differing = [&](const AblationSpec& spec) {
    auto a = to_entries(base), b = to_entries(spec.apply(base));
    std::vector<std::string> keys;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) keys.push_back(a[i].first);
    return keys;
  };
  EXPECT_EQ(differing(find_ablation("No Affinity weighting")), (std::vector<std::string>{"weighting_mode"}));
  EXPECT_EQ(differing(find_ablation("w/ joint-attention")), (std::vector<std::string>{"attention_mode"}));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(differing(rows[i]).size(), 1u) << rows[i].name;
  EXPECT_THROW(find_ablation("No Temporal"), UnknownAblationError);
}

TEST(Ablation, EmptySuiteIsHeaderOnly) {
  auto data = generate_synthetic(small_spec());
  auto table = run_ablation_suite({}, small_head(data), short_train(), data.filter_split("train"),
                                  data.filter_split("test"));
  EXPECT_TRUE(table.rows.empty());
  EXPECT_EQ(table.to_jsonl(), "");
  const auto text = table.to_text();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Ablation, SuiteRunsEveryRow) {
  auto data = generate_synthetic(small_spec());
  std::vector<std::string> names;
  for (const auto& r : standard_ablations()) names.push_back(r.name);
  auto table = run_ablation_suite(names, small_head(data), short_train(5), data.filter_split("train"),
                                  data.filter_split("test"));
  ASSERT_EQ(table.rows.size(), 8u);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.metric, "top1");
    EXPECT_TRUE(std::isfinite(row.final_loss)) << row.name;
  }
  const auto jsonl = table.to_jsonl();
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 8);
}

TEST(Ablation, ToggleCombinations) {
  auto all = toggle_combinations(toy_config());
  EXPECT_EQ(all.size(), 96u);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) ASSERT_FALSE(all[i] == all[j]);
}
