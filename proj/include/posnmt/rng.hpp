#pragma once

#include <cstdint>

namespace posnmt {

// Counter-based generator (Weyl sequence + splitmix64 finalizer). Draw i
// depends only on (seed, i), so streams are identical across platforms and
// the full state serializes as two integers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = seed_ + (++counter_) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Independent stream for a named purpose (parameter init, dropout, ...).
  Rng fork(std::uint64_t stream) const {
    return Rng(seed_ ^ ((stream + 1) * 0xA0761D6478BD642Full));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }
  void restore(std::uint64_t counter) { counter_ = counter; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace posnmt
