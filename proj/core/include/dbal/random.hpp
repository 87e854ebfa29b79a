#pragma once

// Seeded random streams whose output depends only on the seed. The engine is
// std::mt19937_64 (its output sequence is fixed by the standard); the
// distribution transforms below are written out explicitly because the
// standard library's distributions are implementation-defined.

#include <cstdint>
#include <random>

namespace dbal {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the `index`-th child stream of `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  double standard_normal();

  /// Exponential with unit rate (Gamma(1, 1)).
  double exponential();

  /// Binomial(trials, p) by inversion started at the mode.
  std::int64_t binomial(std::int64_t trials, double p);

  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace dbal
