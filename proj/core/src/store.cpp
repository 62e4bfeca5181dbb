#include "trimodal/store.hpp"

#include <sstream>

#include "trimodal/binary_io.hpp"
#include "trimodal/error.hpp"

namespace trimodal {

std::string encode_embeddings(const EmbeddingStore& store) {
  const auto records = store.latents();
  std::ostringstream ss(std::ios::binary);
  io::Writer w(ss);
  w.magic("TMRE");
  w.u16(kEmbeddingFormatVersion);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u32(static_cast<std::uint32_t>(records.size()));
  w.u8(store.sources_bitmap());
  for (const auto& r : records) {
    w.str(r.sample_id);
    w.u8(static_cast<std::uint8_t>(r.source));
    for (float v : r.values) w.f32(v);
  }
  return ss.str();
}

EmbeddingStore decode_embeddings(const std::string& bytes) {
  std::istringstream ss(bytes, std::ios::binary);
  io::Reader r(ss, "embedding store");
  r.expect_magic("TMRE");
  const auto version = r.u16();
  if (version != kEmbeddingFormatVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  const auto dim = r.u32();
  const auto count = r.u32();
  const auto bitmap = r.u8();
  if (dim == 0 || dim > (1u << 16)) r.fail("implausible latent dim");
  EmbeddingStore store(static_cast<int>(dim));
  std::vector<float> values(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string id = r.str();
    const auto src = r.u8();
    if (src >= kNumSources) r.fail("bad source tag");
    if (!(bitmap & (1u << src))) r.fail("record source not in header bitmap");
    for (auto& v : values) v = r.f32();
    store.add(id, static_cast<Source>(src), values);
  }
  r.expect_end();
  if (store.sources_bitmap() != bitmap) r.fail("records do not cover the header's sources");
  return store;
}

void save_embeddings(const std::string& path, const EmbeddingStore& store) {
  io::write_file(path, encode_embeddings(store));
}

EmbeddingStore load_embeddings(const std::string& path) { return decode_embeddings(io::read_file(path)); }

}  // namespace trimodal
