#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <span>

#include "dbal/balancing.hpp"
#include "dbal/errors.hpp"
#include "dbal/synthetic.hpp"
#include "oracles.hpp"

namespace {

using dbal::Axis;
using dbal::Divergence;
using dbal::JointMeasure;
using dbal::Matrix;
using dbal::Order;
using dbal::TargetMarginals;
using dbal::Vector;

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

JointMeasure hand_measure() {
  Matrix m(2, 2);
  m << 0.4, 0.2, 0.1, 0.3;
  return JointMeasure(m);
}

TargetMarginals uniform2() {
  return TargetMarginals(Vector::Constant(2, 0.5), Vector::Constant(2, 0.5));
}

Matrix first_step() {
  Matrix m(2, 2);
  m << 1.0 / 3, 1.0 / 6, 1.0 / 8, 3.0 / 8;
  return m;
}

Matrix second_step() {
  Matrix m(2, 2);
  m << 4.0 / 11, 2.0 / 13, 3.0 / 22, 9.0 / 26;
  return m;
}

TargetMarginals random_targets(std::size_t m, std::size_t l, std::mt19937_64& gen) {
  const auto px = oracle::random_simplex(m, gen);
  const auto py = oracle::random_simplex(l, gen);
  return TargetMarginals(Eigen::Map<const Vector>(px.data(), static_cast<Eigen::Index>(m)),
                         Eigen::Map<const Vector>(py.data(), static_cast<Eigen::Index>(l)));
}

TEST(BalanceStep, HandComputedSequence) {
  const JointMeasure one = dbal::balance_step(hand_measure(), uniform2(), Axis::X);
  EXPECT_TRUE(one.weights().isApprox(first_step(), 1e-15));
  const JointMeasure two = dbal::balance_step(one, uniform2(), Axis::Y);
  EXPECT_TRUE(two.weights().isApprox(second_step(), 1e-15));
  EXPECT_NEAR(dbal::marginal_y(two)(0), 0.5, 1e-15);
  EXPECT_NEAR(dbal::marginal_y(two)(1), 0.5, 1e-15);
}

TEST(BalanceStep, FixedPointOnFeasibleMeasure) {
  const JointMeasure p = dbal::spectrum_controlled_measure(4, 0.3);
  const TargetMarginals t = TargetMarginals::of(p);
  EXPECT_TRUE(dbal::balance_step(p, t, Axis::X).weights().isApprox(p.weights(), 1e-15));
  EXPECT_TRUE(dbal::balance_step(p, t, Axis::Y).weights().isApprox(p.weights(), 1e-15));
}

TEST(BalanceStep, EmptyRowRaisesUnlessTargetIsZero) {
  Matrix w(2, 2);
  w << 0.5, 0.5, 0.0, 0.0;
  const JointMeasure q(w);
  try {
    dbal::balance_step(q, uniform2(), Axis::X);
    FAIL() << "expected EmptyMarginalCell";
  } catch (const dbal::EmptyMarginalCell& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  Vector target(2);
  target << 1.0, 0.0;
  const JointMeasure kept = dbal::balance_step(q, target, Axis::X);
  EXPECT_EQ(kept(1, 0), 0.0);
  EXPECT_EQ(kept(1, 1), 0.0);
}

TEST(BalanceStep, KeepsRatiosWithinEachRow) {
  std::mt19937_64 gen(3);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(4, 5, gen)));
  const TargetMarginals t = random_targets(4, 5, gen);
  const JointMeasure r = dbal::balance_step(q, t, Axis::X);
  for (Eigen::Index x = 0; x < 4; ++x)
    for (Eigen::Index y = 1; y < 5; ++y)
      EXPECT_NEAR(r(x, y) / r(x, 0), q(x, y) / q(x, 0), 1e-12);
}

TEST(BalanceStep, ScaleFree) {
  std::mt19937_64 gen(4);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(3, 3, gen)));
  const JointMeasure scaled(q.weights() * 7.5);
  const TargetMarginals t = random_targets(3, 3, gen);
  EXPECT_TRUE(dbal::balance_step(scaled, t, Axis::X)
                  .weights()
                  .isApprox(dbal::balance_step(q, t, Axis::X).weights(), 1e-14));
}

TEST(BalanceStep, MatchesLoopOracle) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 2 + trial % 5;
    const std::size_t l = 2 + trial % 4;
    const auto grid = oracle::random_positive(m, l, gen);
    const TargetMarginals t = random_targets(m, l, gen);
    for (Order order : {Order::XFirst, Order::YFirst}) {
      const auto trace = dbal::balance_k(JointMeasure(oracle::to_matrix(grid)), t, 7, order);
      const auto expected = oracle::rake(grid, oracle::to_vec(t.p_x()),
                                         oracle::to_vec(t.p_y()), 7,
                                         order == Order::XFirst);
      EXPECT_LT(oracle::max_abs_diff(oracle::to_grid(trace.final_measure().weights()),
                                     expected),
                1e-15);
    }
  }
}

TEST(ProjectMarginal, AllDivergencesGiveTheHandStep) {
  for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
    const JointMeasure q =
        dbal::project_marginal(hand_measure(), Vector::Constant(2, 0.5), Axis::X, d);
    EXPECT_TRUE(q.weights().isApprox(first_step(), 1e-15)) << dbal::to_string(d);
  }
}

TEST(ProjectMarginal, AgreesWithBalanceStepOnBothAxes) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 2 + trial % 7;
    const std::size_t l = 2 + (trial / 7) % 7;
    const JointMeasure r(oracle::to_matrix(oracle::random_positive(m, l, gen)));
    const TargetMarginals t = random_targets(m, l, gen);
    for (Axis axis : {Axis::X, Axis::Y}) {
      const Vector& target = axis == Axis::X ? t.p_x() : t.p_y();
      const Matrix step = dbal::balance_step(r, target, axis).weights();
      for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
        const Matrix proj = dbal::project_marginal(r, target, axis, d).weights();
        EXPECT_LE((proj - step).cwiseAbs().maxCoeff(), 1e-14);
      }
    }
  }
}

TEST(ProjectMarginal, ZeroRowAndFeasibleInput) {
  Matrix w(3, 2);
  w << 0.3, 0.2, 0.0, 0.0, 0.1, 0.4;
  const JointMeasure r(w);
  Vector target(3);
  target << 0.6, 0.0, 0.4;
  for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
    const JointMeasure q = dbal::project_marginal(r, target, Axis::X, d);
    EXPECT_EQ(q(1, 0), 0.0);
    EXPECT_EQ(q(1, 1), 0.0);
    EXPECT_NEAR(dbal::marginal_x(q)(0), 0.6, 1e-15);
  }
  target << 0.5, 0.1, 0.4;
  EXPECT_THROW(dbal::project_marginal(r, target, Axis::X, Divergence::KL),
               dbal::AbsoluteContinuityViolation);

  const Vector own = dbal::marginal_y(r);
  for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
    EXPECT_TRUE(dbal::project_marginal(r, own, Axis::Y, d).weights().isApprox(w, 1e-15));
  }
}

TEST(ProjectMarginal, ClosedFormsMinimizeTheirDivergences) {
  // No feasible perturbation of the projection lowers its objective.
  std::mt19937_64 gen(31);
  std::normal_distribution<double> z(0.0, 1.0);
  const JointMeasure r(oracle::to_matrix(oracle::random_positive(3, 4, gen)));
  const TargetMarginals t = random_targets(3, 4, gen);
  for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
    const Matrix q = dbal::project_marginal(r, t.p_x(), Axis::X, d).weights();
    const auto objective = [&](const Matrix& cand) {
      switch (d) {
        case Divergence::KL:
          return dbal::kl_divergence(JointMeasure(cand), r);
        case Divergence::ReverseKL:
          return dbal::kl_divergence(r, JointMeasure(cand));
        case Divergence::Chi2:
          return dbal::chi2_divergence(JointMeasure(cand), r);
      }
      return 0.0;
    };
    const double best = objective(q);
    for (int trial = 0; trial < 500; ++trial) {
      Matrix delta(3, 4);
      for (Eigen::Index i = 0; i < delta.size(); ++i) delta(i) = z(gen);
      // zero row sums keep the X marginal fixed
      for (Eigen::Index x = 0; x < 3; ++x) delta.row(x).array() -= delta.row(x).mean();
      const Matrix cand = q + 1e-3 * delta;
      if ((cand.array() <= 0).any()) continue;
      EXPECT_GE(objective(cand), best - 1e-15) << dbal::to_string(d);
    }
  }
}

TEST(BalanceK, TraceShapeAndAlternation) {
  const auto trace = dbal::balance_k(hand_measure(), uniform2(), 2);
  ASSERT_EQ(trace.steps(), 2);
  EXPECT_EQ(trace.iterates[0].weights(), hand_measure().weights());
  EXPECT_TRUE(trace.iterates[1].weights().isApprox(first_step(), 1e-15));
  EXPECT_TRUE(trace.iterates[2].weights().isApprox(second_step(), 1e-15));
  EXPECT_EQ(trace.axis_of_step(1), Axis::X);
  EXPECT_EQ(trace.axis_of_step(2), Axis::Y);
  EXPECT_EQ(trace.ratio_bounds.size(), 2u);
  EXPECT_EQ(trace.kl_violations.size(), 3u);

  const auto empty = dbal::balance_k(hand_measure(), uniform2(), 0);
  EXPECT_EQ(empty.steps(), 0);
  EXPECT_EQ(empty.kl_violations.size(), 1u);
}

TEST(BalanceK, ExactAlternationAndYFirstOrder) {
  std::mt19937_64 gen(40);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(5, 4, gen)));
  const TargetMarginals t = random_targets(5, 4, gen);
  for (Order order : {Order::XFirst, Order::YFirst}) {
    const auto trace = dbal::balance_k(q, t, 9, order);
    for (int step = 1; step <= 9; ++step) {
      const JointMeasure& it = trace.iterates[static_cast<std::size_t>(step)];
      if (trace.axis_of_step(step) == Axis::X) {
        EXPECT_LE((dbal::marginal_x(it) - t.p_x()).cwiseAbs().maxCoeff(), 1e-10);
      } else {
        EXPECT_LE((dbal::marginal_y(it) - t.p_y()).cwiseAbs().maxCoeff(), 1e-10);
      }
    }
  }
  EXPECT_EQ(dbal::step_axis(Order::YFirst, 1), Axis::Y);
  EXPECT_EQ(dbal::step_axis(Order::YFirst, 2), Axis::X);
}

TEST(BalanceK, ViolationDecaysGeometrically) {
  std::mt19937_64 gen(41);
  for (int trial = 0; trial < 10; ++trial) {
    const JointMeasure q(oracle::to_matrix(oracle::random_positive(5, 5, gen)));
    const TargetMarginals t = random_targets(5, 5, gen);
    const auto trace = dbal::balance_k(q, t, 40);
    const double early = dbal::marginal_violation(trace.iterates[10], t);
    const double late = dbal::marginal_violation(trace.iterates[20], t);
    const double later = dbal::marginal_violation(trace.iterates[30], t);
    EXPECT_LT(late, early);
    EXPECT_TRUE(later < late || later < 1e-15);
    // Ten more steps shrink the violation by at least a constant factor.
    if (late > 1e-13) {
      EXPECT_LT(later / late, 0.5);
    }
  }
}

TEST(BalanceK, ProjectionRouteMatchesStepRoute) {
  std::mt19937_64 gen(42);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(4, 4, gen)));
  const TargetMarginals t = random_targets(4, 4, gen);
  const auto plain = dbal::balance_k(q, t, 6);
  for (Divergence d : {Divergence::KL, Divergence::ReverseKL, Divergence::Chi2}) {
    const auto projected = dbal::balance_k(q, t, 6, Order::XFirst, d);
    EXPECT_LE((projected.final_measure().weights() - plain.final_measure().weights())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-13);
  }
}

TEST(BalanceK, BalanceFinalMatchesTrace) {
  std::mt19937_64 gen(43);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(3, 6, gen)));
  const TargetMarginals t = random_targets(3, 6, gen);
  for (Order order : {Order::XFirst, Order::YFirst}) {
    EXPECT_EQ(dbal::balance_final(q, t, 5, order).weights(),
              dbal::balance_k(q, t, 5, order).final_measure().weights());
  }
}

TEST(Convergence, FeasibleInputReturnsImmediately) {
  const JointMeasure p = dbal::spectrum_controlled_measure(3, 0.5);
  const auto result = dbal::balance_to_convergence(p, TargetMarginals::of(p));
  EXPECT_EQ(result.iterations, 0);
  EXPECT_EQ(result.measure.weights(), p.weights());
}

TEST(Convergence, ProductInputGivesProductOfTargets) {
  std::mt19937_64 gen(50);
  const auto a = oracle::random_simplex(4, gen);
  const auto b = oracle::random_simplex(3, gen);
  Matrix w(4, 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = a[i] * b[j];
  const TargetMarginals t = random_targets(4, 3, gen);
  const auto result = dbal::balance_to_convergence(JointMeasure(w), t);
  const Matrix expected = t.p_x() * t.p_y().transpose();
  EXPECT_LE((result.measure.weights() - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Convergence, LimitIsTheKlProjection) {
  // The limit must beat every random feasible point in KL to the input.
  const JointMeasure q = hand_measure();
  const auto result = dbal::balance_to_convergence(q, uniform2());
  EXPECT_LE(dbal::marginal_violation(result.measure, uniform2()), 1e-10);
  const double best = dbal::kl_divergence(result.measure, q);
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    // 2x2 with uniform marginals: [[a, 0.5 - a], [0.5 - a, a]]
    const double a = u(gen);
    Matrix w(2, 2);
    w << a, 0.5 - a, 0.5 - a, a;
    EXPECT_LE(best, dbal::kl_divergence(JointMeasure(w), q) + 1e-12);
  }
}

TEST(Convergence, NotConvergedCarriesLastIterate) {
  // Zero pattern that cannot reach the targets: diag support with skewed targets
  Matrix w(2, 2);
  w << 0.5, 0.5, 0.0, 0.0;
  w(1, 0) = 1e-300;
  Vector px(2), py(2);
  px << 0.5, 0.5;
  py << 0.1, 0.9;
  dbal::ConvergenceOptions options;
  options.max_iter = 50;
  try {
    dbal::balance_to_convergence(JointMeasure(w), TargetMarginals(px, py), options);
    FAIL() << "expected NotConverged";
  } catch (const dbal::NotConverged& e) {
    EXPECT_EQ(e.iterations(), 50);
    EXPECT_GT(e.max_violation(), options.tol);
    EXPECT_EQ(e.last_iterate().rows(), 2);
  }
}

TEST(KlViolations, FeasibleInputGivesZeros) {
  const JointMeasure p = dbal::spectrum_controlled_measure(4, 0.2);
  const auto trace = dbal::balance_k(p, TargetMarginals::of(p), 5);
  for (double v : trace.kl_violations) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(KlViolations, MatchesDefinitionAndIsNonincreasing) {
  std::mt19937_64 gen(60);
  const JointMeasure q(oracle::to_matrix(oracle::random_positive(4, 4, gen)));
  const TargetMarginals t = random_targets(4, 4, gen);
  const auto trace = dbal::balance_k(q, t, 10);
  const auto& seq = trace.kl_violations;
  ASSERT_EQ(seq.size(), 11u);
  const auto px = oracle::to_vec(t.p_x());
  const auto py = oracle::to_vec(t.p_y());
  for (std::size_t l = 0; l < seq.size(); ++l) {
    const auto grid = oracle::to_grid(trace.iterates[l].weights());
    const double expected = l % 2 == 0 ? oracle::kl(oracle::row_sums(grid), px)
                                       : oracle::kl(py, oracle::col_sums(grid));
    EXPECT_NEAR(seq[l], expected, 1e-14);
  }
  EXPECT_TRUE(dbal::is_nonincreasing(std::span(seq).subspan(1), 1e-12));
  for (std::size_t l = 2; l < 6; ++l) EXPECT_LT(seq[l], seq[l - 1]);
}

TEST(KlViolations, FirstLinkCanRise) {
  // The input already has the X target, so KL0 = 0 while the Y violation
  // after the (identity) first step is KL((0.2, 0.8) || (0.5, 0.5)).
  const JointMeasure q(Matrix::Constant(2, 2, 0.25));
  const TargetMarginals t(vec({0.5, 0.5}), vec({0.2, 0.8}));
  const auto seq = dbal::balance_k(q, t, 6).kl_violations;
  EXPECT_EQ(seq[0], 0.0);
  EXPECT_NEAR(seq[1], 0.2 * std::log(0.4) + 0.8 * std::log(1.6), 1e-15);
  EXPECT_FALSE(dbal::is_nonincreasing(seq, 1e-12));
  EXPECT_TRUE(dbal::is_nonincreasing(std::span(seq).subspan(1), 1e-12));

  const auto report = dbal::marginal_ratio_bound(dbal::balance_k(q, t, 6), 100);
  EXPECT_EQ(report.initial_kl, 0.0);
  EXPECT_EQ(report.reference_kl, seq[1]);
  EXPECT_TRUE(report.all_hold());
}

TEST(KlViolations, IsNonincreasingHelper) {
  const std::vector<double> down{3.0, 2.0, 2.0, 1.0};
  const std::vector<double> up{3.0, 2.0, 2.5};
  EXPECT_TRUE(dbal::is_nonincreasing(down, 0.0));
  EXPECT_FALSE(dbal::is_nonincreasing(up, 1e-12));
}

TEST(RatioBound, FeasibleInputGivesZeros) {
  const JointMeasure p = dbal::spectrum_controlled_measure(3, 0.4);
  const auto report =
      dbal::marginal_ratio_bound(dbal::balance_k(p, TargetMarginals::of(p), 4), 100);
  for (const auto& e : report.entries) EXPECT_NEAR(e.observed, 0.0, 1e-14);
  EXPECT_TRUE(report.all_hold());
}

TEST(RatioBound, EnvelopesHoldOnSampledTraces) {
  const JointMeasure p = dbal::two_by_two_measure(0.3);
  const TargetMarginals t = TargetMarginals::of(p);
  int small_kl_cases = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto sample = dbal::sample_empirical(p, 300, seed);
    if (!dbal::support_event(sample, t)) continue;
    const auto trace = dbal::balance_k(sample.to_measure(), t, 8);
    const auto report = dbal::marginal_ratio_bound(trace, 300);
    EXPECT_TRUE(report.all_hold()) << "seed " << seed;
    const auto& first = report.entries.front();
    EXPECT_LE(first.observed, first.gross_envelope);
    if (first.small_kl_envelope) {
      ++small_kl_cases;
      EXPECT_LE(first.observed, *first.small_kl_envelope + 1e-12);
    }
  }
  EXPECT_GT(small_kl_cases, 100);
}

TEST(Parsing, OrderAndDivergenceNames) {
  EXPECT_EQ(dbal::parse_order("x-first"), Order::XFirst);
  EXPECT_EQ(dbal::parse_order("y-first"), Order::YFirst);
  EXPECT_EQ(dbal::parse_divergence("reverse-kl"), Divergence::ReverseKL);
  EXPECT_EQ(dbal::parse_divergence("chi2"), Divergence::Chi2);
  EXPECT_THROW(dbal::parse_order("z-first"), dbal::InvalidArgument);
  EXPECT_THROW(dbal::parse_divergence("hellinger"), dbal::InvalidArgument);
}

}  // namespace
