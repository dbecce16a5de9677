#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "victr/data/bundle.hpp"

namespace victr {

// Class a bundle counts towards when sampling: its label, or the lowest
// positive class of a multi-label vector (n if none).
std::size_t primary_class(const EmbeddingBundle& bundle, std::size_t n_classes);

/// Exactly `k` training-split bundles per class, chosen by a seeded shuffle.
/// Output is grouped by class in class order. Throws
/// InsufficientClipsError naming the first class with fewer than k clips.
BundleCollection few_shot_sample(const BundleCollection& bundles, std::size_t k, std::uint64_t seed);

/// Start frame of each of `n_views` evenly spaced windows of length
/// `frames_per_view` over `total` frames. A single view is centred.
std::vector<std::size_t> view_starts(std::size_t total, std::size_t n_views, std::size_t frames_per_view);

/// Temporal views of one bundle; each keeps the label, split and text bank.
/// Throws RangeError if the window does not fit or a count is zero.
std::vector<EmbeddingBundle> multi_view_split(const EmbeddingBundle& bundle, std::size_t n_views,
                                              std::size_t frames_per_view);

}  // namespace victr
