#pragma once

#include <cstdint>

#include "dbal/measure.hpp"
#include "dbal/random.hpp"

namespace dbal {

/// (1/m) [ (1/m) 1 1^T + s (I - (1/m) 1 1^T) ]: uniform marginals and
/// singular values (1, s, ..., s). Needs m >= 2 and 0 < s < 1.
JointMeasure spectrum_controlled_measure(Index m, double s);

/// (1/4) [[1 + s, 1 - s], [1 - s, 1 + s]] for 0 <= s < 1.
JointMeasure two_by_two_measure(double s);

/// Dirichlet(1, ..., 1) draw: normalized unit exponentials.
Vector dirichlet_uniform(Index m, Rng& rng);
Vector dirichlet_uniform(Index m, std::uint64_t seed);

struct CorruptionSpec {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

/// (1 - eps) P_X + eps D_X and (1 - eps) P_Y + eps D_Y with independent
/// Dirichlet(1) draws D_X, D_Y. Accepts eps in [0, 1).
TargetMarginals corrupt_marginals(const TargetMarginals& targets,
                                  const CorruptionSpec& spec);

/// Same mixture with caller-supplied draws; eps in [0, 1].
TargetMarginals corrupt_marginals(const TargetMarginals& targets,
                                  double epsilon, const Vector& draw_x,
                                  const Vector& draw_y);

/// h(x_i, y_j) = |Z_ij| with i.i.d. standard normal Z.
TestFunction random_test_function(Index m, Index l, std::uint64_t seed);

}  // namespace dbal
