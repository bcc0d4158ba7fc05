#ifndef LASIL_RNG_HPP
#define LASIL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace lasil {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, key...). Parallel consumers therefore see the same numbers
/// regardless of scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Derive an independent generator for a sub-stream.
  CounterRng fork(std::uint64_t stream) const { return CounterRng(mix(seed_ ^ mix(stream + 0x51ed27u))); }

  std::uint64_t bits(std::initializer_list<std::uint64_t> key) const {
    std::uint64_t h = mix(seed_ + 0x9e3779b97f4a7c15ull);
    for (std::uint64_t k : key) h = mix(h ^ (k + 0x632be59bd9b4e019ull + (h << 6) + (h >> 2)));
    return h;
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::initializer_list<std::uint64_t> key) const {
    return (static_cast<double>(bits(key) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two decorrelated uniforms.
  double normal(std::initializer_list<std::uint64_t> key) const {
    const std::uint64_t h = bits(key);
    const double u1 = (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(mix(h ^ 0xda942042e4dd58b5ull) >> 11) + 0.5) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n, std::initializer_list<std::uint64_t> key) const {
    return static_cast<std::uint64_t>(uniform(key) * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
};

/// Stream tags keep draws for different purposes apart.
enum class RngStream : std::uint64_t {
  kPerturbation = 1,
  kPolicySample = 2,
  kLatent = 3,
  kBatch = 4,
  kRollout = 5,
  kInit = 6,
  kDemand = 7,
  kDecoderSample = 8,
};

inline std::uint64_t tag(RngStream s) { return static_cast<std::uint64_t>(s); }

}  // namespace lasil

#endif  // LASIL_RNG_HPP
