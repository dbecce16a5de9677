#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "victr/data/bundle.hpp"

namespace victr {

/// Synthetic stand-in for backbone embeddings.
///
/// Class c has a unit center u_c; centers are drawn until every pair is at
/// least `separation_deg` apart. Frame t of a class-c video is
///   normalize((1 - a_t) u_c + a_t u_{c+1} + noise * g / sqrt(D))
/// with a_t = drift * t / (T - 1), g standard normal and class indices cyclic.
/// The frame mean of class c therefore sits between u_c and u_{c+1}, which a
/// pooled cosine classifier cannot resolve for drift near 1.
///
/// Aux prompt y is normalize(u_y + u_{y+1}) (y taken modulo n), in category
/// y mod k unless `aux_categories` says otherwise. Class text is u_c. Labels
/// are class indices, or one-hot vectors when `multi_label` is set.
struct SyntheticSpec {
  std::size_t n_classes = 10;
  std::size_t n_train_per_class = 40;
  std::size_t n_test_per_class = 10;
  std::size_t frames = 8;
  std::size_t dim = 32;
  double separation_deg = 60.0;
  double noise = 0.3;
  double drift = 1.0;  // 0 = no drift
  std::size_t n_aux = 10;
  std::size_t n_categories = 2;
  // Category of each aux prompt; empty means y mod k.
  std::vector<std::size_t> aux_categories;
  bool multi_label = false;
  std::uint64_t seed = 0;

  // Throws SpecError.
  void validate() const;
};

BundleCollection generate_synthetic(const SyntheticSpec& spec);

}  // namespace victr
