#pragma once

#include <cmath>
#include <cstdint>

namespace amod {

// Counter-based random stream (splitmix64). A stream is fully determined by
// its key, so draws keyed by (seed, step, entry) are independent of the order
// in which the simulation evaluates them. All uniform/Poisson draws in the
// project go through this generator to keep runs byte-for-byte reproducible
// across platforms; std::random distributions are implementation-defined.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : state_(key) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  uint64_t state_;
};

// Order-independent key mixer for deriving per-(seed, step, entry) streams.
inline uint64_t mix_key(uint64_t a, uint64_t b, uint64_t c = 0x6A09E667F3BCC909ULL) {
  auto round = [](uint64_t x) {
    x = (x ^ (x >> 33)) * 0xFF51AFD7ED558CCDULL;
    x = (x ^ (x >> 33)) * 0xC4CEB9FE1A85EC53ULL;
    return x ^ (x >> 33);
  };
  return round(round(round(a) + b) + c);
}

// Poisson sample by Knuth's product-of-uniforms method. Adequate for the
// per-pair rates used here (lambda well below the ~700 underflow limit).
inline int poisson_sample(double lambda, CounterRng& rng) {
  if (lambda <= 0.0) return 0;
  double limit = std::exp(-lambda);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.next_double();
  } while (p > limit);
  return k - 1;
}

}  // namespace amod
