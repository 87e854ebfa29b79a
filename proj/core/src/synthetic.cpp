#include "dbal/synthetic.hpp"

#include <cmath>

#include "dbal/errors.hpp"

namespace dbal {

JointMeasure spectrum_controlled_measure(Index m, double s) {
  if (m < 2) throw InvalidArgument("spectrum-controlled measure needs m >= 2");
  if (!(s > 0.0 && s < 1.0)) {
    throw InvalidArgument("dependence level s must lie in (0, 1)");
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  const Matrix ones = Matrix::Constant(m, m, inv_m);
  const Matrix centering = Matrix::Identity(m, m) - ones;
  return JointMeasure(inv_m * (ones + s * centering));
}

JointMeasure two_by_two_measure(double s) {
  if (!(s >= 0.0 && s < 1.0)) {
    throw InvalidArgument("dependence level s must lie in [0, 1)");
  }
  Matrix w(2, 2);
  w << 1.0 + s, 1.0 - s, 1.0 - s, 1.0 + s;
  return JointMeasure(0.25 * w);
}

Vector dirichlet_uniform(Index m, Rng& rng) {
  if (m < 1) throw InvalidArgument("Dirichlet dimension must be >= 1");
  Vector draw(m);
  for (Index i = 0; i < m; ++i) draw(i) = rng.exponential();
  return draw / draw.sum();
}

Vector dirichlet_uniform(Index m, std::uint64_t seed) {
  Rng rng(seed);
  return dirichlet_uniform(m, rng);
}

TargetMarginals corrupt_marginals(const TargetMarginals& targets,
                                  const CorruptionSpec& spec) {
  if (!(spec.epsilon >= 0.0 && spec.epsilon < 1.0)) {
    throw InvalidArgument("misspecification level must lie in [0, 1)");
  }
  Rng rng(spec.seed);
  const Vector draw_x = dirichlet_uniform(targets.p_x().size(), rng);
  const Vector draw_y = dirichlet_uniform(targets.p_y().size(), rng);
  return corrupt_marginals(targets, spec.epsilon, draw_x, draw_y);
}

TargetMarginals corrupt_marginals(const TargetMarginals& targets,
                                  double epsilon, const Vector& draw_x,
                                  const Vector& draw_y) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("misspecification level must lie in [0, 1]");
  }
  if (draw_x.size() != targets.p_x().size() ||
      draw_y.size() != targets.p_y().size()) {
    throw InvalidArgument("corruption draws differ in size from the targets");
  }
  Vector p_x = (1.0 - epsilon) * targets.p_x() + epsilon * draw_x;
  Vector p_y = (1.0 - epsilon) * targets.p_y() + epsilon * draw_y;
  // Absorb the last bits of roundoff so the sum-to-one check is exact.
  p_x /= p_x.sum();
  p_y /= p_y.sum();
  return TargetMarginals(std::move(p_x), std::move(p_y));
}

TestFunction random_test_function(Index m, Index l, std::uint64_t seed) {
  if (m < 1 || l < 1) throw InvalidArgument("test function needs m, l >= 1");
  Rng rng(seed);
  Matrix values(m, l);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < l; ++j) values(i, j) = std::abs(rng.standard_normal());
  }
  return TestFunction(std::move(values));
}

}  // namespace dbal
