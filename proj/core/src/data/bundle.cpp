#include "victr/data/bundle.hpp"

#include <cmath>

#include "victr/errors.hpp"
#include "victr/numerics/nn.hpp"

namespace victr {

LabelMode label_mode(const Label& label) {
  return std::holds_alternative<std::size_t>(label) ? LabelMode::single_label
                                                    : LabelMode::multi_label;
}

void validate_label(const Label& label, LabelMode mode, std::size_t n_classes) {
  if (label_mode(label) != mode) throw LabelError("label kind does not match the label mode");
  if (const auto* idx = std::get_if<std::size_t>(&label)) {
    if (*idx >= n_classes) {
      throw LabelError("class index " + std::to_string(*idx) + " out of range for " +
                       std::to_string(n_classes) + " classes");
    }
    return;
  }
  const auto& targets = std::get<std::vector<std::uint8_t>>(label);
  if (targets.size() != n_classes) {
    throw LabelError("multi-label vector has " + std::to_string(targets.size()) +
                     " entries, expected " + std::to_string(n_classes));
  }
  for (auto v : targets) {
    if (v > 1) throw LabelError("multi-label entries must be 0 or 1");
  }
}

std::vector<double> label_targets(const Label& label, std::size_t n_classes) {
  std::vector<double> out(n_classes, 0.0);
  if (const auto* idx = std::get_if<std::size_t>(&label)) {
    if (*idx >= n_classes) throw LabelError("class index out of range");
    out[*idx] = 1.0;
    return out;
  }
  const auto& targets = std::get<std::vector<std::uint8_t>>(label);
  if (targets.size() != n_classes) throw LabelError("multi-label length mismatch");
  for (std::size_t i = 0; i < n_classes; ++i) out[i] = targets[i];
  return out;
}

void require_nonzero_rows(const Tensor& t, const std::string& what) {
  if (t.empty()) return;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    double sq = 0.0;
    for (double v : t.row(r)) sq += v * v;
    if (!std::isfinite(sq)) throw NonFiniteError(what + ": non-finite row " + std::to_string(r));
    if (std::sqrt(sq) <= kNormFloor) {
      throw ZeroNormError(what + ": row " + std::to_string(r) + " has zero norm");
    }
  }
}

void TextBank::validate() const {
  if (class_text.rank() != 2 || class_text.rows() == 0) {
    throw ShapeError("text bank needs at least one class embedding");
  }
  if (!aux_text.empty() && aux_text.cols() != class_text.cols()) {
    throw ShapeError("aux text width differs from class text width");
  }
  if (aux_categories.size() != n_aux()) {
    throw ShapeError("aux category list has " + std::to_string(aux_categories.size()) +
                     " entries for " + std::to_string(n_aux()) + " aux embeddings");
  }
  if (n_categories == 0) throw ShapeError("text bank needs k >= 1 categories");
  for (auto c : aux_categories) {
    if (c >= n_categories) throw ShapeError("aux category id out of range");
  }
  require_nonzero_rows(class_text, "class text");
  require_nonzero_rows(aux_text, "aux text");
}

BundleCollection BundleCollection::filter_split(const std::string& split) const {
  BundleCollection out{mode, text, {}};
  for (const auto& b : items) {
    if (b.split == split) out.items.push_back(b);
  }
  return out;
}

void BundleCollection::validate() const {
  if (!text) throw ShapeError("bundle collection has no text bank");
  text->validate();
  for (const auto& b : items) {
    if (b.text != text) throw ShapeError("bundle " + b.video_id + " does not share the text bank");
    if (b.frames.rank() != 2 || b.frames.rows() == 0) {
      throw ShapeError("bundle " + b.video_id + " has no frames");
    }
    if (b.frames.cols() != text->dim()) {
      throw ShapeError("bundle " + b.video_id + " frame width differs from text width");
    }
    require_nonzero_rows(b.frames, "frames of " + b.video_id);
    validate_label(b.label, mode, text->n_classes());
  }
}

}  // namespace victr
