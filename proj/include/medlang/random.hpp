#ifndef MEDLANG_RANDOM_HPP
#define MEDLANG_RANDOM_HPP

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace medlang {

// std::mt19937_64 is bit-specified by the standard, but the std
// distributions are not, so every draw goes through the helpers below to
// keep outputs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Draws a category from unnormalised non-negative weights by inverse CDF.
  int categorical(std::span<const double> weights);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a root seed and a stage label.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t index);

}  // namespace medlang

#endif  // MEDLANG_RANDOM_HPP
