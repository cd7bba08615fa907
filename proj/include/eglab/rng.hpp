#pragma once

#include <cstdint>

namespace eglab {

// Counter-based splittable PRNG.  Every draw is a pure function of
// (seed, stream, counter), so trial i produces identical bits no matter how
// trials are partitioned across threads, and sub-streams can be handed to
// nested samplers without coordination.
//
// The mixer is the splitmix64 finalizer applied twice with distinct keys;
// statistical quality is far beyond what acceptance sampling needs.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed + 0x9E3779B97F4A7C15ull) ^
                 mix(stream + 0xBF58476D1CE4E5B9ull))),
        counter_(0) {}

  // Independent child stream, e.g. one per trial index.
  CounterRng split(std::uint64_t stream) const {
    CounterRng c(0, 0);
    c.key_ = mix(key_ ^ mix(stream + 0x94D049BB133111EBull));
    c.counter_ = 0;
    return c;
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  // Uniform in [0, n) via rejection (exact, no modulo bias).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Uniform double in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }
};

}  // namespace eglab
