#pragma once
// Counter-based deterministic randomness.  Every consumer derives its values
// by hashing (seed, domain tag, counter) instead of pulling from a shared
// stateful generator, so results are independent of evaluation order, worker
// count and interleaving.

#include <cstdint>

namespace gatesim {

inline constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer: bijective 64-bit mix with full avalanche.
constexpr uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

// Seed for an independent substream; tag picks the domain (layout, probe, ...).
constexpr uint64_t substream(uint64_t seed, uint64_t tag) {
  return mix64(seed + tag * kGolden);
}

// Domain tags.  Distinct consumers must never share a stream.
inline constexpr uint64_t kTagLayout = 1;
inline constexpr uint64_t kTagProbe = 2;
inline constexpr uint64_t kTagPatchGuard = 3;
inline constexpr uint64_t kTagDualGdt = 4;

// Uniform double in (0,1), identical on every platform: top 52 bits plus a
// half-ulp offset, so 0 and 1 are unreachable and the mapping is exact.
constexpr double to_unit(uint64_t h) {
  return (static_cast<double>(h >> 12) + 0.5) * 0x1p-52;
}

// Sequential helper for one-shot construction work (layout generation).
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  double next_unit() { return to_unit(next()); }

  // Unbiased-enough bounded draw via 128-bit multiply-shift.
  uint64_t next_below(uint64_t bound) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  uint64_t state_;
};

}  // namespace gatesim
