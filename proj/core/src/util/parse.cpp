#include "victr/util/parse.hpp"

#include <charconv>
#include <cmath>

#include "victr/errors.hpp"

namespace victr {

namespace {
[[noreturn]] void bad(std::string_view value, std::string_view key, std::string_view kind) {
  throw ConfigError("'" + std::string(key) + "' expects " + std::string(kind) + ", got '" +
                    std::string(value) + "'");
}
}  // namespace

std::uint64_t parse_u64(std::string_view value, std::string_view key) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc{} || ptr != end) bad(value, key, "a non-negative integer");
  return out;
}

std::size_t parse_size(std::string_view value, std::string_view key) {
  return static_cast<std::size_t>(parse_u64(value, key));
}

double parse_double(std::string_view value, std::string_view key) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    bad(value, key, "a finite number");
  }
  return out;
}

bool parse_bool(std::string_view value, std::string_view key) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad(value, key, "true or false");
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace victr
