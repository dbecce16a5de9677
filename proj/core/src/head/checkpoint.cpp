#include "victr/head/checkpoint.hpp"

#include <cstring>

#include "victr/errors.hpp"
#include "victr/io/binary.hpp"

namespace victr {

namespace {
constexpr std::string_view kMagic = "VCKP";

std::uint32_t tensor_count(const HeadParams& params) {
  std::uint32_t n = 0;
  visit_params(params, [&](const std::string&, const Tensor&) { ++n; });
  return n;
}
}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const HeadConfig& config, const HeadParams& params) {
  io::ByteWriter w;
  w.raw(kMagic);
  w.u8(kCheckpointVersion);
  std::string text;
  for (const auto& [k, v] : to_entries(config)) text += k + "=" + v + "\n";
  w.str(text);
  w.u32(tensor_count(params));
  visit_params(params, [&](const std::string& name, const Tensor& t) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
    for (double v : t.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      w.u64(bits);
    }
  });
  w.seal();
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw MagicMismatchError("not a checkpoint: bad magic");
  }
  io::ByteReader r(bytes);
  r.take(kMagic.size());
  if (const auto v = r.u8(); v != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(v));
  }
  io::check_envelope(bytes, kMagic);

  Checkpoint ck;
  const auto text = r.str();
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const auto line = std::string_view(text).substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw FormatError("malformed config line in checkpoint");
    try {
      set_entry(ck.config, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw FormatError(std::string("checkpoint config: ") + e.what());
    }
  }
  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }

  ck.params = init_head_params(ck.config, Rng(0));
  const auto count = r.u32();
  if (count != tensor_count(ck.params)) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                      std::to_string(tensor_count(ck.params)));
  }
  visit_params(ck.params, [&](const std::string& name, Tensor& t) {
    const auto stored = r.str();
    if (stored != name) throw FormatError("checkpoint tensor '" + stored + "' where '" + name + "' expected");
    const auto rank = r.u32();
    Shape shape(rank);
    for (auto& e : shape) e = r.u32();
    if (shape != t.shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_to_string(shape) +
                        ", expected " + shape_to_string(t.shape()));
    }
    r.require(t.size() * 8, name);
    for (auto& v : t.values()) {
      const auto bits = r.u64();
      std::memcpy(&v, &bits, sizeof v);
    }
  });
  if (r.remaining() != 4) throw FormatError("trailing bytes in checkpoint");
  return ck;
}

void save_checkpoint(const std::string& path, const HeadConfig& config, const HeadParams& params) {
  io::write_file(path, encode_checkpoint(config, params));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace victr
