#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "victr/head/config.hpp"
#include "victr/head/params.hpp"

namespace victr {

struct Checkpoint {
  HeadConfig config;
  HeadParams params;
};

/// Layout: "VCKP" | u8 version | str config ("key=value" lines) | u32 count |
/// per tensor: str name, u32 rank, rank x u32 extents, f64 values | u32 crc32.
/// Values are stored at full precision so a loaded head predicts exactly as
/// the saved one.
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const HeadConfig& config, const HeadParams& params);
// Throws the FormatError family on malformed input.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string& path, const HeadConfig& config, const HeadParams& params);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace victr
