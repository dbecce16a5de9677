#include "victr/io/binary.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "victr/errors.hpp"

namespace victr::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

namespace {
template <class T>
void put(std::vector<std::uint8_t>& buf, T v) {
  std::uint8_t tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}
}  // namespace

void ByteWriter::u16(std::uint16_t v) { put(buf_, v); }
void ByteWriter::u32(std::uint32_t v) { put(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put(buf_, v); }
void ByteWriter::f32(float v) { put(buf_, v); }

void ByteWriter::raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  raw(s);
}

void ByteWriter::seal() { u32(crc32(buf_)); }

void ByteReader::require(std::size_t n, std::string_view what) const {
  if (n > remaining()) {
    throw TruncationError("truncated input: need " + std::to_string(n) + " bytes for " +
                          std::string(what) + ", " + std::to_string(remaining()) + " remain");
  }
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
  require(n, "payload");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

namespace {
template <class T>
T get(ByteReader& r) {
  auto b = r.take(sizeof(T));
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}
}  // namespace

std::uint8_t ByteReader::u8() { return get<std::uint8_t>(*this); }
std::uint16_t ByteReader::u16() { return get<std::uint16_t>(*this); }
std::uint32_t ByteReader::u32() { return get<std::uint32_t>(*this); }
std::uint64_t ByteReader::u64() { return get<std::uint64_t>(*this); }
float ByteReader::f32() { return get<float>(*this); }

std::string ByteReader::str(std::size_t max_len) {
  const auto n = u32();
  if (n > max_len) throw FormatError("string length " + std::to_string(n) + " exceeds limit");
  auto b = take(n);
  return std::string(b.begin(), b.end());
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

void check_envelope(std::span<const std::uint8_t> data, std::string_view magic) {
  if (data.size() < magic.size() ||
      std::memcmp(data.data(), magic.data(), magic.size()) != 0) {
    throw MagicMismatchError("bad magic: expected '" + std::string(magic) + "'");
  }
  if (data.size() < magic.size() + 4) throw TruncationError("input too short for checksum");
  const auto body = data.first(data.size() - 4);
  std::uint32_t stored;
  std::memcpy(&stored, data.data() + body.size(), 4);
  if (crc32(body) != stored) throw ChecksumError("checksum mismatch");
}

}  // namespace victr::io
