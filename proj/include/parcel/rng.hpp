#pragma once

#include <cstdint>
#include <random>

namespace parcel {

// Deterministic random source. mt19937_64 output is fixed by the standard,
// and we derive doubles ourselves instead of going through
// std::uniform_real_distribution (whose mapping is implementation-defined),
// so identical seeds give identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, n). n must be > 0. Modulo bias is negligible for the
  // menu sizes used here (all far below 2^32).
  std::uint64_t next_below(std::uint64_t n) { return gen_() % n; }

  // Uniform in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller (deterministic, no distribution objects).
  double next_normal();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace parcel
