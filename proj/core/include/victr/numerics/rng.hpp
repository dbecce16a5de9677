#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace victr {

/// Counter-based generator: draw i of stream s under seed k is a pure hash of
/// (k, s, i), so streams are platform-stable and independent of call order
/// across streams. Distribution transforms are implemented here rather than
/// with <random> distributions, whose outputs are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  // Independent substream keyed by `id`, starting at counter 0.
  [[nodiscard]] Rng fork(std::uint64_t id) const noexcept;

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;   // standard normal, Box-Muller
  // Normal(0, stddev) resampled until |x| <= bound * stddev.
  double truncated_normal(double stddev, double bound = 2.0) noexcept;
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  template <class T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace victr
