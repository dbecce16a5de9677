#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "victr/numerics/tensor.hpp"

namespace victr {

// Index of the largest score; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

/// Fraction of rows of `scores` (videos x n) whose argmax equals the label.
/// Throws LabelError on a count mismatch or out-of-range label.
double top1_accuracy(const Tensor& scores, std::span<const std::size_t> labels);

struct MapReport {
  double map = 0.0;
  // AP of every class that has a positive, in class order.
  std::vector<double> per_class;
  std::vector<std::size_t> evaluated;
  // Classes without a positive; excluded from the mean.
  std::vector<std::size_t> skipped;
};

/// Average precision of one class: videos sorted by descending score (equal
/// scores keep input order), AP = mean over positives of precision at the
/// positive's rank. Returns -1 when there is no positive.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> positives);

/// Mean AP over classes. `labels` is videos x n of 0/1. Throws
/// DegenerateClassError when no class has a positive, LabelError on shape
/// mismatch.
MapReport mean_average_precision(const Tensor& scores, const std::vector<std::vector<std::uint8_t>>& labels);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(std::span<const double> values);

}  // namespace victr
