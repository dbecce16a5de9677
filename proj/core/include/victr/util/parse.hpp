#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace victr {

// Strict scalar parsers for config values. The whole string must be
// consumed; failures throw ConfigError naming `key`.
std::size_t parse_size(std::string_view value, std::string_view key);
std::uint64_t parse_u64(std::string_view value, std::string_view key);
double parse_double(std::string_view value, std::string_view key);
bool parse_bool(std::string_view value, std::string_view key);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace victr
