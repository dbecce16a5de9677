#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "victr/data/bundle.hpp"
#include "victr/eval/metrics.hpp"
#include "victr/head/config.hpp"
#include "victr/head/params.hpp"

namespace victr {

struct ViewOptions {
  std::size_t n_views = 1;
  // 0 means every frame of the video.
  std::size_t frames_per_view = 0;
};

struct EvalResult {
  std::string metric;  // "top1" or "mAP"
  double value = 0.0;
  Tensor scores;       // videos x n, class logits averaged over views
  std::vector<std::size_t> skipped_classes;  // mAP only
};

/// Class logits for one video, averaged over its temporal views.
std::vector<double> video_scores(const HeadConfig& config, const HeadParams& params,
                                 const EmbeddingBundle& video, const ViewOptions& views = {});

/// Top-1 accuracy for single-label data, mAP for multi-label data. The head
/// config is adapted to the collection's text bank (n, m, k).
EvalResult evaluate(const HeadConfig& config, const HeadParams& params, const BundleCollection& data,
                    const ViewOptions& views = {});

struct ZeroShotReport {
  std::vector<double> per_split;
  MeanStd summary;
};

/// Evaluates a trained head on each split, using each split's own class text
/// embeddings. Only the affinity classifier transfers to a different n.
/// Throws ShapeError on an embedding-width mismatch.
ZeroShotReport zero_shot_eval(const HeadConfig& config, const HeadParams& params,
                              const std::vector<BundleCollection>& splits, const ViewOptions& views = {});

}  // namespace victr
