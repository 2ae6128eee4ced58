#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "be/errors.hpp"

namespace be {

// PCG32 (XSH-RR 64/32) with an explicit stream id. Constants follow the
// published generator: multiplier 6364136223846793005, increment
// (stream << 1) | 1, seeded via the two-step srandom procedure. Every RNG
// stream in an experiment derives from (master_seed, path of child ids), so
// identical configs reproduce identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), state_(0), inc_((stream << 1u) | 1u) {
    step();
    state_ += seed;
    step();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    step();
    const auto xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32u) | next_u32();
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound), bound >= 1. Rejection sampling keeps the
  // draw unbiased.
  std::uint32_t uniform_int(std::uint32_t bound) {
    if (bound == 0) throw DomainError("uniform_int: bound must be positive");
    const std::uint32_t threshold = (0u - bound) % bound;
    for (;;) {
      const std::uint32_t r = next_u32();
      if (r >= threshold) return r % bound;
    }
  }

  // Index sampled proportionally to probs (need not be normalized exactly;
  // negative entries are invalid). Inverse-CDF walk.
  std::size_t sample_discrete(std::span<const double> probs) {
    if (probs.empty()) throw DomainError("sample_discrete: empty distribution");
    double total = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0)) throw DomainError("sample_discrete: negative weight");
      total += p;
    }
    if (total <= 0.0) throw DomainError("sample_discrete: zero total mass");
    const double u = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

  // Derive an independent child stream. Children are a pure function of the
  // parent's construction parameters, not of how much it has been consumed.
  Rng split(std::uint64_t child_id) const {
    return Rng(mix(mix(seed_, stream_), child_id), child_id);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // splitmix64 finalizer; used to decorrelate derived seeds.
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  void step() { state_ = state_ * 6364136223846793005ull + inc_; }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  std::uint64_t inc_;
};

}  // namespace be
