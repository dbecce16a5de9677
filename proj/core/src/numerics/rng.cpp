#include "victr/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace victr {

namespace {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng Rng::fork(std::uint64_t id) const noexcept {
  return Rng(seed_, mix64(stream_ ^ mix64(id + 0x9e3779b97f4a7c15ULL)));
}

std::uint64_t Rng::next_u64() noexcept {
  const std::uint64_t key = mix64(seed_ + 0x9e3779b97f4a7c15ULL) ^ mix64(stream_ * 0xd1b54a32d192ed03ULL + 1);
  return mix64(key + 0x9e3779b97f4a7c15ULL * ++counter_);
}

double Rng::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() noexcept {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::truncated_normal(double stddev, double bound) noexcept {
  for (;;) {
    const double x = normal();
    if (std::abs(x) <= bound) return x * stddev;
  }
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

}  // namespace victr
