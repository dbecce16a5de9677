#include "victr/data/bundle_file.hpp"

#include <cstring>
#include <limits>

#include "victr/errors.hpp"
#include "victr/io/binary.hpp"

namespace victr {

namespace {

constexpr std::string_view kMagic = "VCTR";

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(std::string(what) + " does not fit the bundle format");
  }
  return static_cast<std::uint32_t>(v);
}

void put_floats(io::ByteWriter& w, const Tensor& t) {
  for (double v : t.values()) w.f32(static_cast<float>(v));
}

Tensor get_floats(io::ByteReader& r, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (auto& v : t.values()) v = static_cast<double>(r.f32());
  return t;
}

struct BundleMeta {
  std::string id;
  std::size_t frames = 0;
  std::string split;
  Label label;
};

}  // namespace

std::vector<std::uint8_t> encode_bundles(const BundleCollection& bundles) {
  bundles.validate();
  const auto& bank = *bundles.text;
  const auto n = bank.n_classes();
  const auto m = bank.n_aux();
  const auto d = bank.dim();

  io::ByteWriter meta;
  meta.u8(static_cast<std::uint8_t>(bundles.mode));
  meta.u32(to_u32(n, "n"));
  meta.u32(to_u32(m, "m"));
  meta.u32(to_u32(bank.n_categories, "k"));
  meta.u32(to_u32(d, "D"));
  meta.u32(to_u32(bundles.items.size(), "bundle count"));
  for (auto c : bank.aux_categories) meta.u32(to_u32(c, "category"));
  for (const auto& b : bundles.items) {
    meta.str(b.video_id);
    meta.u32(to_u32(b.n_frames(), "T"));
    meta.str(b.split);
    if (const auto* idx = std::get_if<std::size_t>(&b.label)) {
      meta.u32(to_u32(*idx, "label"));
    } else {
      const auto& v = std::get<std::vector<std::uint8_t>>(b.label);
      meta.bytes(v);
    }
  }

  io::ByteWriter w;
  w.raw(kMagic);
  w.u8(kBundleFormatVersion);
  w.u32(to_u32(meta.size(), "metadata"));
  w.bytes(meta.buffer());
  put_floats(w, bank.class_text);
  if (m > 0) put_floats(w, bank.aux_text);
  for (const auto& b : bundles.items) put_floats(w, b.frames);
  w.seal();
  return w.buffer();
}

BundleCollection decode_bundles(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw MagicMismatchError("not a bundle file: bad magic");
  }
  io::ByteReader r(bytes);
  r.take(kMagic.size());
  const auto version = r.u8();
  if (version != kBundleFormatVersion) {
    throw VersionError("unsupported bundle format version " + std::to_string(version));
  }
  const auto meta_len = r.u32();
  r.require(meta_len, "metadata");
  io::ByteReader mr(r.take(meta_len));

  const auto mode_byte = mr.u8();
  if (mode_byte > 1) throw FormatError("unknown label mode " + std::to_string(mode_byte));
  const auto mode = static_cast<LabelMode>(mode_byte);
  const std::size_t n = mr.u32();
  const std::size_t m = mr.u32();
  const std::size_t k = mr.u32();
  const std::size_t d = mr.u32();
  const std::size_t count = mr.u32();
  if (n == 0 || d == 0 || k == 0) throw FormatError("bundle header declares an empty dimension");

  auto bank = std::make_shared<TextBank>();
  bank->n_categories = k;
  mr.require(m * 4, "aux categories");
  bank->aux_categories.resize(m);
  for (auto& c : bank->aux_categories) c = mr.u32();

  std::vector<BundleMeta> metas;
  metas.reserve(std::min<std::size_t>(count, mr.remaining()));
  std::uint64_t payload_floats = static_cast<std::uint64_t>(n + m) * d;
  for (std::size_t i = 0; i < count; ++i) {
    BundleMeta bm;
    bm.id = mr.str();
    bm.frames = mr.u32();
    if (bm.frames == 0) throw FormatError("bundle '" + bm.id + "' declares zero frames");
    bm.split = mr.str();
    if (mode == LabelMode::single_label) {
      bm.label = static_cast<std::size_t>(mr.u32());
    } else {
      auto raw = mr.take(n);
      bm.label = std::vector<std::uint8_t>(raw.begin(), raw.end());
    }
    payload_floats += static_cast<std::uint64_t>(bm.frames) * d;
    metas.push_back(std::move(bm));
  }
  if (mr.remaining() != 0) throw FormatError("trailing bytes in bundle metadata");

  const std::uint64_t expected = payload_floats * 4 + 4;
  if (r.remaining() != expected) {
    throw TruncationError("bundle payload is " + std::to_string(r.remaining()) +
                          " bytes, header declares " + std::to_string(expected));
  }
  io::check_envelope(bytes, kMagic);

  bank->class_text = get_floats(r, n, d);
  if (m > 0) bank->aux_text = get_floats(r, m, d);

  BundleCollection out;
  out.mode = mode;
  out.text = bank;
  out.items.reserve(metas.size());
  for (auto& bm : metas) {
    EmbeddingBundle b;
    b.video_id = std::move(bm.id);
    b.frames = get_floats(r, bm.frames, d);
    b.label = std::move(bm.label);
    b.split = std::move(bm.split);
    b.text = bank;
    out.items.push_back(std::move(b));
  }
  try {
    out.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("bundle file content is invalid: ") + e.what());
  }
  return out;
}

void write_bundle_file(const std::string& path, const BundleCollection& bundles) {
  io::write_file(path, encode_bundles(bundles));
}

BundleCollection read_bundle_file(const std::string& path) {
  return decode_bundles(io::read_file(path));
}

}  // namespace victr
