#pragma once

#include <cmath>
#include <cstdint>

namespace ehstore {

/// Counter-based generator: the SplitMix64 finalizer applied to
/// key + counter * golden-ratio increment. Stream r of a given seed is a
/// pure function of (seed, r), so replication r draws the same sequence no
/// matter how many other streams exist and regardless of thread scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed + kGolden) ^ mix(stream * kGolden + 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform on (0, 1].
  double next_unit() {
    return ((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Exponential by inverse transform, -mean * ln(U).
  double next_exp(double mean) { return -mean * std::log(next_unit()); }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ehstore
