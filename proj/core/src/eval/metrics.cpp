#include "victr/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "victr/errors.hpp"

namespace victr {

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw ShapeError("argmax of an empty score vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

double top1_accuracy(const Tensor& scores, std::span<const std::size_t> labels) {
  if (scores.rows() != labels.size()) {
    throw LabelError("top1_accuracy: " + std::to_string(scores.rows()) + " score rows for " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) throw LabelError("top1_accuracy: no videos");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= scores.cols()) throw LabelError("top1_accuracy: label out of range");
    if (argmax(scores.row(i)) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double average_precision(std::span<const double> scores, std::span<const std::uint8_t> positives) {
  if (scores.size() != positives.size()) throw LabelError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (positives[order[rank]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return hits == 0 ? -1.0 : sum / static_cast<double>(hits);
}

MapReport mean_average_precision(const Tensor& scores, const std::vector<std::vector<std::uint8_t>>& labels) {
  if (scores.rows() != labels.size()) throw LabelError("mAP: score and label counts differ");
  const std::size_t videos = labels.size();
  const std::size_t n = videos == 0 ? 0 : scores.cols();
  MapReport report;
  std::vector<double> column(videos);
  std::vector<std::uint8_t> pos(videos);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t v = 0; v < videos; ++v) {
      if (labels[v].size() != n) throw LabelError("mAP: label vector length differs from score width");
      column[v] = scores(v, c);
      pos[v] = labels[v][c];
    }
    const double ap = average_precision(column, pos);
    if (ap < 0.0) {
      report.skipped.push_back(c);
    } else {
      report.per_class.push_back(ap);
      report.evaluated.push_back(c);
    }
  }
  if (report.per_class.empty()) throw DegenerateClassError("mAP: no class has a positive video");
  report.map = std::accumulate(report.per_class.begin(), report.per_class.end(), 0.0) /
               static_cast<double>(report.per_class.size());
  return report;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw RangeError("mean_std of nothing");
  // Deviations from the first value, so identical inputs give exactly 0.
  const double n = static_cast<double>(values.size());
  const double pivot = values.front();
  double shift = 0.0;
  for (double v : values) shift += v - pivot;
  shift /= n;
  double var = 0.0;
  for (double v : values) var += (v - pivot - shift) * (v - pivot - shift);
  return {pivot + shift, std::sqrt(var / n)};
}

}  // namespace victr
