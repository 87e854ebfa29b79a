#include "dbal/random.hpp"

#include <cmath>
#include <numbers>

namespace dbal {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::standard_normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  // Box-Muller; radius argument in (0, 1] so the log is finite.
  const double u1 = uniform_open_zero();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_normal_ = true;
  return radius * std::cos(angle);
}

double Rng::exponential() { return -std::log(uniform_open_zero()); }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::int64_t Rng::binomial(std::int64_t trials, double p) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  if (p > 0.5) return trials - binomial(trials, 1.0 - p);

  const auto n = static_cast<double>(trials);
  const auto mode = static_cast<std::int64_t>(std::floor((n + 1.0) * p));
  const std::int64_t start = mode > trials ? trials : mode;
  const double k = static_cast<double>(start);
  const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                         std::lgamma(n - k + 1.0) + k * std::log(p) +
                         (n - k) * std::log1p(-p);
  const double odds = p / (1.0 - p);

  // Walk outward from the mode, consuming the uniform against the pmf. Each
  // outcome is visited once, so this inverts a reordered CDF exactly.
  double u = uniform();
  const double pmf_mode = std::exp(log_pmf);
  u -= pmf_mode;
  if (u <= 0.0) return start;

  std::int64_t lo = start;
  std::int64_t hi = start;
  double pmf_lo = pmf_mode;
  double pmf_hi = pmf_mode;
  while (lo > 0 || hi < trials) {
    if (lo > 0) {
      pmf_lo *= static_cast<double>(lo) /
                (static_cast<double>(trials - lo + 1) * odds);
      --lo;
      u -= pmf_lo;
      if (u <= 0.0) return lo;
    }
    if (hi < trials) {
      pmf_hi *= static_cast<double>(trials - hi) * odds /
                static_cast<double>(hi + 1);
      ++hi;
      u -= pmf_hi;
      if (u <= 0.0) return hi;
    }
    if (pmf_lo == 0.0 && pmf_hi == 0.0) break;
  }
  // Only reachable through accumulated roundoff in the tail.
  return start;
}

}  // namespace dbal
