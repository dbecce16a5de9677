#include "victr/data/sampling.hpp"

#include "victr/errors.hpp"
#include "victr/numerics/rng.hpp"

namespace victr {

std::size_t primary_class(const EmbeddingBundle& bundle, std::size_t n_classes) {
  if (const auto* idx = std::get_if<std::size_t>(&bundle.label)) return *idx;
  const auto& v = std::get<std::vector<std::uint8_t>>(bundle.label);
  for (std::size_t i = 0; i < v.size() && i < n_classes; ++i) {
    if (v[i] != 0) return i;
  }
  return n_classes;
}

BundleCollection few_shot_sample(const BundleCollection& bundles, std::size_t k, std::uint64_t seed) {
  if (!bundles.text) throw ShapeError("bundle collection has no text bank");
  if (k == 0) throw RangeError("few-shot sampling needs k >= 1");
  const auto n = bundles.text->n_classes();
  std::vector<std::vector<std::size_t>> by_class(n);
  for (std::size_t i = 0; i < bundles.items.size(); ++i) {
    const auto& b = bundles.items[i];
    if (b.split != "train") continue;
    const auto c = primary_class(b, n);
    if (c < n) by_class[c].push_back(i);
  }
  BundleCollection out{bundles.mode, bundles.text, {}};
  out.items.reserve(n * k);
  const Rng root(seed);
  for (std::size_t c = 0; c < n; ++c) {
    auto& pool = by_class[c];
    if (pool.size() < k) {
      throw InsufficientClipsError("class " + std::to_string(c) + " has " + std::to_string(pool.size()) +
                                   " training clips, " + std::to_string(k) + " requested");
    }
    Rng rng = root.fork(c);
    rng.shuffle(std::span<std::size_t>(pool));
    for (std::size_t j = 0; j < k; ++j) out.items.push_back(bundles.items[pool[j]]);
  }
  return out;
}

std::vector<std::size_t> view_starts(std::size_t total, std::size_t n_views, std::size_t frames_per_view) {
  if (n_views == 0 || frames_per_view == 0) throw RangeError("view count and length must be positive");
  if (frames_per_view > total) {
    throw RangeError("view of " + std::to_string(frames_per_view) + " frames exceeds the " +
                     std::to_string(total) + " available");
  }
  const auto slack = total - frames_per_view;
  if (n_views == 1) return {slack / 2};
  std::vector<std::size_t> starts(n_views);
  for (std::size_t i = 0; i < n_views; ++i) starts[i] = i * slack / (n_views - 1);
  return starts;
}

std::vector<EmbeddingBundle> multi_view_split(const EmbeddingBundle& bundle, std::size_t n_views,
                                              std::size_t frames_per_view) {
  const auto starts = view_starts(bundle.n_frames(), n_views, frames_per_view);
  if (n_views == 1 && frames_per_view == bundle.n_frames()) return {bundle};
  std::vector<EmbeddingBundle> views;
  views.reserve(n_views);
  for (std::size_t i = 0; i < n_views; ++i) {
    EmbeddingBundle v = bundle;
    v.video_id = bundle.video_id + "#view" + std::to_string(i);
    v.frames = slice_rows(bundle.frames, starts[i], starts[i] + frames_per_view);
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace victr
