#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trimodal/retrieval.hpp"
#include "trimodal/synthgen.hpp"

namespace trimodal {

inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;
inline constexpr std::uint16_t kDatasetFormatVersion = 1;

// TMRE: magic, u16 version, u32 d, u32 record count, u8 sources bitmap,
// then records {string id, u8 source, d x f32}.
[[nodiscard]] std::string encode_embeddings(const EmbeddingStore& store);
[[nodiscard]] EmbeddingStore decode_embeddings(const std::string& bytes);
void save_embeddings(const std::string& path, const EmbeddingStore& store);
[[nodiscard]] EmbeddingStore load_embeddings(const std::string& path);

// TMRD: magic, u16 version, u32 text dim, then a scene table and sample
// records referencing it. Floats are 32-bit little-endian throughout.
[[nodiscard]] std::string encode_samples(const std::vector<TrimodalSample>& samples);
[[nodiscard]] std::vector<TrimodalSample> decode_samples(const std::string& bytes);

struct DatasetManifest {
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t train_scenes = 0;
  std::size_t test_scenes = 0;
  int text_dim = kDefaultTextDim;
};

// Writes train.tmrd, test.tmrd and manifest.txt into dir (created if needed).
DatasetManifest save_dataset(const std::string& dir, const Dataset& data, const GeneratorConfig& cfg);
[[nodiscard]] Dataset load_dataset(const std::string& dir);
[[nodiscard]] DatasetManifest read_manifest(const std::string& dir);

}  // namespace trimodal
