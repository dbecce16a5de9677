#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "victr/numerics/tensor.hpp"

namespace victr {

enum class LabelMode : std::uint8_t { single_label = 0, multi_label = 1 };

/// A class index (single-label) or an n-length 0/1 vector (multi-label).
using Label = std::variant<std::size_t, std::vector<std::uint8_t>>;

LabelMode label_mode(const Label& label);
// Throws LabelError if the label does not fit n classes under `mode`.
void validate_label(const Label& label, LabelMode mode, std::size_t n_classes);
std::vector<double> label_targets(const Label& label, std::size_t n_classes);

/// Text embeddings shared by every video of a dataset: n class prompts, m
/// auxiliary prompts, and the category (0..k-1) of each auxiliary prompt.
struct TextBank {
  Tensor class_text;  // n x D
  Tensor aux_text;    // m x D (m may be 0)
  std::vector<std::size_t> aux_categories;
  std::size_t n_categories = 1;

  [[nodiscard]] std::size_t n_classes() const { return class_text.rows(); }
  [[nodiscard]] std::size_t n_aux() const { return aux_text.empty() ? 0 : aux_text.rows(); }
  [[nodiscard]] std::size_t dim() const { return class_text.cols(); }

  // Shape, category-range and norm checks. Throws ShapeError / ZeroNormError.
  void validate() const;
};

/// One video: per-frame backbone embeddings plus its label. The text bank is
/// shared by pointer between all bundles of a collection.
struct EmbeddingBundle {
  std::string video_id;
  Tensor frames;  // T x D
  Label label;
  std::string split = "train";
  std::shared_ptr<const TextBank> text;

  [[nodiscard]] std::size_t n_frames() const { return frames.rows(); }
};

struct BundleCollection {
  LabelMode mode = LabelMode::single_label;
  std::shared_ptr<const TextBank> text;
  std::vector<EmbeddingBundle> items;

  // Bundles whose split tag equals `split`, sharing this collection's text.
  [[nodiscard]] BundleCollection filter_split(const std::string& split) const;
  // Checks every invariant: shared text bank, label validity, no zero rows.
  void validate() const;
};

// Throws ZeroNormError if any row of `t` has norm <= 1e-8.
void require_nonzero_rows(const Tensor& t, const std::string& what);

}  // namespace victr
