#include "dmk/prng.hpp"

namespace dmk {

uint64_t Prng::splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t Prng::mix(uint64_t seed, uint64_t lane) {
  return splitmix64(seed ^ splitmix64(lane));
}

Prng::Prng(uint64_t seed) : state_(splitmix64(seed)) {
  if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;  // xorshift state must be nonzero
}

uint64_t Prng::next_u64() {
  uint64_t x = state_;
  x ^= x >> 12;
  x ^= x << 25;
  x ^= x >> 27;
  state_ = x;
  return x * 0x2545F4914F6CDD1Dull;
}

double Prng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Prng::uniform_int(uint64_t n) {
  // Reject the tail that would bias the modulus.
  const uint64_t limit = n * ((~uint64_t{0}) / n);
  uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Prng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

int Prng::uniform_in(int lo, int hi) {
  return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace dmk
