#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace trimodal {

// mt19937_64 with hand-rolled distributions: the standard library's
// distributions are implementation-defined, and every number we produce
// has to be reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  int range(int lo, int hi_inclusive);
  double normal();

  template <typename T>
  void shuffle(std::span<T> xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::swap(xs[i - 1], xs[below(i)]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& xs) {
    shuffle(std::span<T>(xs));
  }

  [[nodiscard]] std::string serialize() const;
  void deserialize(const std::string& state);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives an independent stream seed from a parent seed and a stream tag.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace trimodal
