#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "trimodal/error.hpp"
#include "trimodal/synthgen.hpp"

namespace trimodal {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::vector<std::string> words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

// Signed feature hashing over unigrams and bigrams, L2-normalized.
TextFeature featurize_text(const std::string& caption, int dim) {
  if (caption.empty()) throw ConfigError("caption must be non-empty");
  if (dim <= 0) throw ConfigError("text feature dimension must be positive");
  std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
  const auto w = words(caption);
  auto add = [&](std::string_view token) {
    const std::uint64_t h = fnv1a(token);
    const auto index = static_cast<std::size_t>((h >> 1) % static_cast<std::uint64_t>(dim));
    acc[index] += (h & 1u) ? -1.0 : 1.0;
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    add(w[i]);
    if (i + 1 < w.size()) add(w[i] + ' ' + w[i + 1]);
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);

  TextFeature out;
  out.raw_caption = caption;
  out.values.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.values[i] = norm > 0 ? static_cast<float>(acc[i] / norm) : 0.0f;
  }
  return out;
}

}  // namespace trimodal
