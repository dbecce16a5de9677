#include "victr/data/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "victr/errors.hpp"
#include "victr/numerics/nn.hpp"
#include "victr/numerics/rng.hpp"

namespace victr {

namespace {

constexpr int kMaxCenterAttempts = 10000;

void normalize_row(std::span<double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  if (!(norm > kNormFloor)) throw SpecError("synthetic generator produced a zero-norm vector");
  for (double& x : v) x /= norm;
}

Tensor draw_centers(const SyntheticSpec& spec, Rng rng) {
  const double max_cos = std::cos(spec.separation_deg * std::numbers::pi / 180.0);
  Tensor centers({spec.n_classes, spec.dim});
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    int attempts = 0;
    for (;;) {
      if (++attempts > kMaxCenterAttempts) {
        throw SpecError("cannot place " + std::to_string(spec.n_classes) + " centers " +
                        std::to_string(spec.separation_deg) + " degrees apart in D=" +
                        std::to_string(spec.dim));
      }
      auto row = centers.row(c);
      for (double& x : row) x = rng.normal();
      normalize_row(row);
      bool ok = true;
      for (std::size_t j = 0; j < c && ok; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < spec.dim; ++i) dot += row[i] * centers(j, i);
        ok = dot <= max_cos;
      }
      if (ok) break;
    }
  }
  return centers;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_classes < 2) throw SpecError("need at least 2 classes");
  if (frames == 0 || dim == 0) throw SpecError("frames and dim must be positive");
  if (n_train_per_class + n_test_per_class == 0) throw SpecError("no videos requested");
  if (!(separation_deg > 0.0 && separation_deg < 180.0)) {
    throw SpecError("separation angle must lie in (0, 180) degrees");
  }
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw SpecError("noise scale must be >= 0");
  if (!(drift >= 0.0 && drift <= 1.0)) throw SpecError("drift must lie in [0, 1]");
  if (n_categories == 0) throw SpecError("need at least one aux category");
  if (n_aux > 0 && n_categories > n_aux) throw SpecError("more aux categories than aux prompts");
  if (!aux_categories.empty()) {
    if (aux_categories.size() != n_aux) throw SpecError("aux category list length differs from n_aux");
    std::vector<bool> used(n_categories, false);
    for (auto c : aux_categories) {
      if (c >= n_categories) throw SpecError("aux category id out of range");
      used[c] = true;
    }
    for (bool u : used) {
      if (!u) throw SpecError("an aux category has no prompts");
    }
  }
}

BundleCollection generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  const auto n = spec.n_classes;
  const auto d = spec.dim;
  const Tensor centers = draw_centers(spec, root.fork(1));

  auto bank = std::make_shared<TextBank>();
  bank->class_text = centers;
  bank->n_categories = spec.n_categories;
  if (spec.n_aux > 0) {
    bank->aux_text = Tensor({spec.n_aux, d});
    for (std::size_t y = 0; y < spec.n_aux; ++y) {
      auto row = bank->aux_text.row(y);
      for (std::size_t i = 0; i < d; ++i) row[i] = centers(y % n, i) + centers((y + 1) % n, i);
      normalize_row(row);
      bank->aux_categories.push_back(spec.aux_categories.empty() ? y % spec.n_categories
                                                                : spec.aux_categories[y]);
    }
  }

  BundleCollection out;
  out.mode = spec.multi_label ? LabelMode::multi_label : LabelMode::single_label;
  out.text = bank;
  const auto per_class = spec.n_train_per_class + spec.n_test_per_class;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t v = 0; v < per_class; ++v) {
      Rng rng = root.fork(1000 + c * per_class + v);
      EmbeddingBundle b;
      b.video_id = "c" + std::to_string(c) + "_v" + std::to_string(v);
      b.split = v < spec.n_train_per_class ? "train" : "test";
      b.frames = Tensor({spec.frames, d});
      for (std::size_t t = 0; t < spec.frames; ++t) {
        const double a =
            spec.frames > 1 ? spec.drift * static_cast<double>(t) / static_cast<double>(spec.frames - 1) : 0.0;
        auto row = b.frames.row(t);
        for (std::size_t i = 0; i < d; ++i) {
          row[i] = (1.0 - a) * centers(c, i) + a * centers((c + 1) % n, i);
          if (spec.noise > 0.0) row[i] += spec.noise * inv_sqrt_d * rng.normal();
        }
        normalize_row(row);
      }
      if (spec.multi_label) {
        std::vector<std::uint8_t> one_hot(n, 0);
        one_hot[c] = 1;
        b.label = std::move(one_hot);
      } else {
        b.label = c;
      }
      b.text = bank;
      out.items.push_back(std::move(b));
    }
  }
  return out;
}

}  // namespace victr
