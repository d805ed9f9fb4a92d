#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace dmk {

// Deterministic 64-bit generator used everywhere randomness is needed
// (splits, weight init, synthetic scenes). xorshift64* stream seeded
// through one splitmix64 round; update equations are documented in the
// README so splits stay reproducible across implementations.
class Prng {
 public:
  explicit Prng(uint64_t seed);

  uint64_t next_u64();

  // [0,1) with 53 significant bits.
  double next_double();

  // Unbiased draw from [0,n), n > 0. Rejection sampling.
  uint64_t uniform_int(uint64_t n);

  double uniform(double lo, double hi);
  int uniform_in(int lo, int hi);  // inclusive range [lo,hi]

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = static_cast<size_t>(uniform_int(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  // One splitmix64 round; also used to derive substream seeds.
  static uint64_t splitmix64(uint64_t x);

  // Stable derivation of a substream seed from (seed, lane).
  static uint64_t mix(uint64_t seed, uint64_t lane);

 private:
  uint64_t state_;
};

// FNV-1a 64-bit, for deriving per-name PRNG lanes from strings.
uint64_t fnv1a64(std::string_view s);

}  // namespace dmk
