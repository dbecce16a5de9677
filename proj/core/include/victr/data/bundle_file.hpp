#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "victr/data/bundle.hpp"

namespace victr {

/// Bundle file layout (little-endian):
///
///   "VCTR" | u8 version | u32 meta_len | meta | payload | u32 crc32
///
/// meta:    u8 label_mode, u32 n, u32 m, u32 k, u32 D, u32 count,
///          m x u32 aux category, then per bundle:
///          str video_id, u32 T, str split, label
///          (u32 class index, or n x u8 for multi-label)
/// payload: class_text (n*D), aux_text (m*D), then every bundle's frames
///          (T*D), all f32.
/// str is a u32 byte length followed by UTF-8 bytes. The CRC covers every
/// byte before it.
inline constexpr std::uint8_t kBundleFormatVersion = 1;

std::vector<std::uint8_t> encode_bundles(const BundleCollection& bundles);
// Throws MagicMismatchError, VersionError, TruncationError, ChecksumError or
// FormatError for other malformed content.
BundleCollection decode_bundles(std::span<const std::uint8_t> bytes);

void write_bundle_file(const std::string& path, const BundleCollection& bundles);
BundleCollection read_bundle_file(const std::string& path);

}  // namespace victr
