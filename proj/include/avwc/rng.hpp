#pragma once

#include <cstdint>

namespace avwc {

// Counter-based generator built on the SplitMix64 finalizer
// (Steele/Lea/Flood, "Fast splittable pseudorandom number generators").
// Every output is a pure function of (seed, stream, counter), so substreams
// can be derived for independent trials and replayed in any order without
// changing results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Keyed variant: hash of (seed, stream, counter).
  static std::uint64_t at(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
    return mix(mix(mix(seed) ^ (stream + 0x6a09e667f3bcc909ULL)) ^
               (counter + 0xbb67ae8584caa73bULL));
  }

  std::uint64_t next_u64() { return at(seed_, stream_, counter_++); }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform index in [0, n). n must be >= 1.
  std::size_t next_index(std::size_t n) {
    return static_cast<std::size_t>(next_double() * static_cast<double>(n)) %
           n;
  }

  // Independent substream; safe to use concurrently with the parent.
  Rng substream(std::uint64_t tag) const {
    return Rng(seed_, mix(stream_ ^ (tag + 0x3c6ef372fe94f82bULL)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

}  // namespace avwc
