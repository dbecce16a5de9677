#include "victr/eval/evaluate.hpp"

#include "victr/data/sampling.hpp"
#include "victr/errors.hpp"
#include "victr/head/head.hpp"

namespace victr {

std::vector<double> video_scores(const HeadConfig& config, const HeadParams& params,
                                 const EmbeddingBundle& video, const ViewOptions& views) {
  const std::size_t len = views.frames_per_view == 0 ? video.n_frames() : views.frames_per_view;
  const auto parts = multi_view_split(video, views.n_views, len);
  std::vector<double> sum;
  for (const auto& view : parts) {
    const auto logits = predict(config, params, view).class_logits;
    if (sum.empty()) sum.assign(logits.size(), 0.0);
    for (std::size_t i = 0; i < logits.size(); ++i) sum[i] += logits[i];
  }
  for (auto& v : sum) v /= static_cast<double>(parts.size());
  return sum;
}

EvalResult evaluate(const HeadConfig& config, const HeadParams& params, const BundleCollection& data,
                    const ViewOptions& views) {
  data.validate();
  if (data.items.empty()) throw ShapeError("evaluation set is empty");
  const HeadConfig cfg = config_for_bank(config, *data.text);
  const std::size_t n = cfg.n_classes;
  EvalResult out;
  out.scores = Tensor({data.items.size(), n});
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const auto s = video_scores(cfg, params, data.items[i], views);
    std::copy(s.begin(), s.end(), out.scores.row(i).begin());
  }
  if (data.mode == LabelMode::single_label) {
    std::vector<std::size_t> labels;
    labels.reserve(data.items.size());
    for (const auto& b : data.items) labels.push_back(std::get<std::size_t>(b.label));
    out.metric = "top1";
    out.value = top1_accuracy(out.scores, labels);
  } else {
    std::vector<std::vector<std::uint8_t>> labels;
    labels.reserve(data.items.size());
    for (const auto& b : data.items) labels.push_back(std::get<std::vector<std::uint8_t>>(b.label));
    auto report = mean_average_precision(out.scores, labels);
    out.metric = "mAP";
    out.value = report.map;
    out.skipped_classes = std::move(report.skipped);
  }
  return out;
}

ZeroShotReport zero_shot_eval(const HeadConfig& config, const HeadParams& params,
                              const std::vector<BundleCollection>& splits, const ViewOptions& views) {
  if (splits.empty()) throw RangeError("zero-shot evaluation needs at least one split");
  ZeroShotReport report;
  for (const auto& split : splits) {
    if (!split.text) throw ShapeError("split has no text bank");
    if (split.text->dim() != config.embed_dim) {
      throw ShapeError("split embeddings have width " + std::to_string(split.text->dim()) +
                       ", head expects " + std::to_string(config.embed_dim));
    }
    if (config.classifier_mode == ClassifierMode::visual_only &&
        split.text->n_classes() != config.n_classes) {
      throw ShapeError("the visual classifier is tied to the training label count");
    }
    report.per_split.push_back(evaluate(config, params, split, views).value);
  }
  report.summary = mean_std(report.per_split);
  return report;
}

}  // namespace victr
