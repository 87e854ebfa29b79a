#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>

#include "dbal/errors.hpp"
#include "dbal/spectral.hpp"
#include "dbal/synthetic.hpp"
#include "oracles.hpp"

namespace {

using dbal::JointMeasure;
using dbal::Matrix;
using dbal::Order;
using dbal::TestFunction;
using dbal::Vector;

TestFunction corner_indicator() {
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 1.0;
  return TestFunction(h);
}

JointMeasure random_measure(std::size_t m, std::size_t l, std::mt19937_64& gen,
                            double floor = 0.05) {
  return JointMeasure(oracle::to_matrix(oracle::random_positive(m, l, gen, floor)));
}

TestFunction random_h(std::size_t m, std::size_t l, std::mt19937_64& gen) {
  return TestFunction(oracle::to_matrix(oracle::random_function(m, l, gen)));
}

// Singular values of D_X^{-1/2} P D_Y^{-1/2} from the eigenvalues of A^T A
// (or A A^T), a route independent of the library's SVD.
std::vector<double> oracle_singular_values(const JointMeasure& p) {
  const Vector px = dbal::marginal_x(p);
  const Vector py = dbal::marginal_y(p);
  Matrix a = p.weights();
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) /= std::sqrt(px(i) * py(j));
  const Matrix gram = a.rows() <= a.cols() ? Matrix(a * a.transpose())
                                           : Matrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  std::vector<double> values;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
    values.push_back(std::sqrt(std::max(solver.eigenvalues()(i), 0.0)));
  std::sort(values.rbegin(), values.rend());
  return values;
}

TEST(ConditionalMean, ConstantAndProduct) {
  std::mt19937_64 gen(1);
  const JointMeasure p = random_measure(3, 4, gen);
  const TestFunction c(Matrix::Constant(3, 4, 2.5));
  EXPECT_LE((dbal::conditional_mean_x(p, c).array() - 2.5).abs().maxCoeff(), 1e-14);
  EXPECT_LE((dbal::conditional_mean_y(p, c).array() - 2.5).abs().maxCoeff(), 1e-14);

  const auto a = oracle::random_simplex(3, gen);
  const auto b = oracle::random_simplex(4, gen);
  Matrix w(3, 4), h(3, 4);
  Vector f(3), g(4);
  for (int i = 0; i < 3; ++i) f(i) = i + 1.0;
  for (int j = 0; j < 4; ++j) g(j) = 0.5 * j - 1.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      w(i, j) = a[i] * b[j];
      h(i, j) = f(i) * g(j);
    }
  const JointMeasure product(w);
  double eg = 0.0;
  for (int j = 0; j < 4; ++j) eg += b[j] * g(j);
  EXPECT_LE((dbal::conditional_mean_x(product, TestFunction(h)) - f * eg)
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(ConditionalMean, CornerIndicatorOnTwoByTwo) {
  for (double s : {0.0, 0.3, 0.8}) {
    const JointMeasure p = dbal::two_by_two_measure(s);
    const Vector mx = dbal::conditional_mean_x(p, corner_indicator());
    const Vector my = dbal::conditional_mean_y(p, corner_indicator());
    EXPECT_NEAR(mx(0), (1 + s) / 2, 1e-15);
    EXPECT_NEAR(mx(1), 0.0, 1e-15);
    EXPECT_NEAR(my(0), (1 + s) / 2, 1e-15);
    EXPECT_NEAR(my(1), 0.0, 1e-15);
  }
}

TEST(ConditionalMean, TowerPropertyAndZeroRow) {
  std::mt19937_64 gen(2);
  const JointMeasure p = random_measure(4, 3, gen);
  const TestFunction h = random_h(4, 3, gen);
  const double mean = dbal::expectation(p, h);
  EXPECT_NEAR(dbal::marginal_x(p).dot(dbal::conditional_mean_x(p, h)), mean, 1e-14);
  EXPECT_NEAR(dbal::marginal_y(p).dot(dbal::conditional_mean_y(p, h)), mean, 1e-14);

  Matrix w(2, 2);
  w << 0.5, 0.5, 0.0, 0.0;
  EXPECT_THROW(dbal::conditional_mean_x(JointMeasure(w), corner_indicator()),
               dbal::ZeroMarginal);
}

TEST(Centering, IdempotentOrthogonalAndMatchesOracle) {
  std::mt19937_64 gen(3);
  const JointMeasure p = random_measure(4, 5, gen);
  const TestFunction h = random_h(4, 5, gen);
  const TestFunction cx = dbal::center_x(p, h);
  EXPECT_LE((dbal::center_x(p, cx).values() - cx.values()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(dbal::conditional_mean_x(p, cx).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT(oracle::max_abs_diff(oracle::to_grid(cx.values()),
                                 oracle::center_rows(oracle::to_grid(p.weights()),
                                                     oracle::to_grid(h.values()))),
            1e-14);
  EXPECT_LT(oracle::max_abs_diff(oracle::to_grid(dbal::center_y(p, h).values()),
                                 oracle::center_cols(oracle::to_grid(p.weights()),
                                                     oracle::to_grid(h.values()))),
            1e-14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = oracle::random_function(4, 1, gen);
    Vector fv(4);
    for (int i = 0; i < 4; ++i) fv(i) = f[i][0];
    const Matrix lifted = dbal::lift_x(fv, 5).values();
    EXPECT_NEAR((p.weights().array() * cx.values().array() * lifted.array()).sum(), 0.0,
                1e-14);
  }
  EXPECT_LE(dbal::center_x(p, TestFunction(Matrix::Constant(4, 5, 3.0)))
                .values()
                .cwiseAbs()
                .maxCoeff(),
            1e-14);
}

TEST(Decompose, InvariantsOnRandomMeasures) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 2 + trial % 6;
    const std::size_t l = 2 + (trial / 6) % 5;
    const JointMeasure p = random_measure(m, l, gen);
    const auto d = dbal::decompose(p);
    const Eigen::Index r = static_cast<Eigen::Index>(std::min(m, l));
    ASSERT_EQ(d.rank(), r);
    EXPECT_NEAR(d.singular_values(0), 1.0, 1e-10);
    EXPECT_LT(d.second_singular_value(), 1.0);
    for (Eigen::Index j = 1; j < r; ++j) {
      EXPECT_LE(d.singular_values(j), d.singular_values(j - 1) + 1e-15);
      EXPECT_GE(d.singular_values(j), 0.0);
    }
    EXPECT_LE((d.alpha.col(0).array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_LE((d.beta.col(0).array() - 1.0).abs().maxCoeff(), 1e-12);
    const Matrix ga = d.alpha.transpose() * d.p_x.asDiagonal() * d.alpha;
    const Matrix gb = d.beta.transpose() * d.p_y.asDiagonal() * d.beta;
    ASSERT_EQ(d.alpha.cols(), p.rows());
    ASSERT_EQ(d.beta.cols(), p.cols());
    EXPECT_LE((ga - Matrix::Identity(p.rows(), p.rows())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((gb - Matrix::Identity(p.cols(), p.cols())).cwiseAbs().maxCoeff(), 1e-10);
    // Unpaired directions on the longer axis are annihilated by the other
    // axis's conditional mean.
    for (Eigen::Index j = r; j < p.rows(); ++j) {
      EXPECT_LE(dbal::conditional_mean_y(p, dbal::lift_x(d.alpha.col(j), p.cols()))
                    .cwiseAbs().maxCoeff(), 1e-10);
    }
    for (Eigen::Index j = r; j < p.cols(); ++j) {
      EXPECT_LE(dbal::conditional_mean_x(p, dbal::lift_y(d.beta.col(j), p.rows()))
                    .cwiseAbs().maxCoeff(), 1e-10);
    }
    for (Eigen::Index j = 0; j < r; ++j) {
      const Vector mu_y_alpha =
          dbal::conditional_mean_y(p, dbal::lift_x(d.alpha.col(j), p.cols()));
      const Vector mu_x_beta =
          dbal::conditional_mean_x(p, dbal::lift_y(d.beta.col(j), p.rows()));
      EXPECT_LE((mu_y_alpha - d.singular_values(j) * d.beta.col(j)).cwiseAbs().maxCoeff(),
                1e-9);
      EXPECT_LE((mu_x_beta - d.singular_values(j) * d.alpha.col(j)).cwiseAbs().maxCoeff(),
                1e-9);
      // sign convention
      Eigen::Index top;
      d.alpha.col(j).cwiseAbs().maxCoeff(&top);
      EXPECT_GT(d.alpha(top, j), 0.0);
    }
    const auto expected = oracle_singular_values(p);
    for (Eigen::Index j = 0; j < r; ++j)
      EXPECT_NEAR(d.singular_values(j), expected[static_cast<std::size_t>(j)], 1e-10);
  }
}

TEST(Decompose, KnownInstances) {
  for (int i = 1; i <= 9; ++i) {
    const double s = 0.1 * i;
    const auto d = dbal::decompose(dbal::two_by_two_measure(s));
    EXPECT_NEAR(d.singular_values(1), s, 1e-12);
    // alpha_2 = beta_2 = (1, -1) up to a common sign
    EXPECT_NEAR(std::abs(d.alpha(0, 1)), 1.0, 1e-12);
    EXPECT_NEAR(d.alpha(0, 1), -d.alpha(1, 1), 1e-12);
    EXPECT_NEAR(d.beta(0, 1), d.alpha(0, 1), 1e-12);
    EXPECT_NEAR(d.beta(1, 1), d.alpha(1, 1), 1e-12);
  }
  const auto d = dbal::decompose(dbal::spectrum_controlled_measure(10, 0.3));
  EXPECT_NEAR(d.singular_values(0), 1.0, 1e-12);
  for (Eigen::Index j = 1; j < 10; ++j) EXPECT_NEAR(d.singular_values(j), 0.3, 1e-9);
}

TEST(Decompose, ProductMeasureHasNoDependence) {
  std::mt19937_64 gen(5);
  const auto a = oracle::random_simplex(4, gen);
  const auto b = oracle::random_simplex(5, gen);
  Matrix w(4, 5);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 5; ++j) w(i, j) = a[i] * b[j];
  const auto d = dbal::decompose(JointMeasure(w));
  for (Eigen::Index j = 1; j < d.rank(); ++j) EXPECT_NEAR(d.singular_values(j), 0.0, 1e-12);
}

TEST(Coordinates, CornerIndicatorValues) {
  for (double s : {0.0, 0.2, 0.5, 0.9}) {
    const JointMeasure p = dbal::two_by_two_measure(s);
    const auto d = dbal::decompose(p);
    const auto c = dbal::coordinates(p, corner_indicator(), d);
    EXPECT_NEAR(c.u(0), 0.0, 1e-15);
    EXPECT_NEAR(c.v(0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(c.u(1)), (1 + s) / 4, 1e-14);
    EXPECT_NEAR(c.v(1), c.u(1), 1e-14);
    // Brute-force inner product of mu_X hbar with alpha_2 under P_X.
    const double mean = dbal::expectation(p, corner_indicator());
    const Vector mx = dbal::conditional_mean_x(p, corner_indicator()).array() - mean;
    double inner = 0.0;
    for (int x = 0; x < 2; ++x) inner += 0.5 * mx(x) * d.alpha(x, 1);
    EXPECT_NEAR(c.u(1), inner, 1e-15);
  }
}

TEST(Coordinates, ConstantReconstructionAndParseval) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 2 + trial % 5;
    const std::size_t l = 2 + trial % 4;
    const JointMeasure p = random_measure(m, l, gen);
    const auto d = dbal::decompose(p);
    const auto zero = dbal::coordinates(p, TestFunction(Matrix::Constant(m, l, 4.0)), d);
    EXPECT_LE(zero.u.cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LE(zero.v.cwiseAbs().maxCoeff(), 1e-13);

    const TestFunction h = random_h(m, l, gen);
    const auto c = dbal::coordinates(p, h, d);
    const double mean = dbal::expectation(p, h);
    const Vector mx = dbal::conditional_mean_x(p, h).array() - mean;
    const Vector my = dbal::conditional_mean_y(p, h).array() - mean;
    EXPECT_NEAR(c.u(0), 0.0, 1e-13);
    EXPECT_NEAR(c.v(0), 0.0, 1e-13);
    // alpha and beta are complete bases, so both expansions are exact
    EXPECT_LE((d.alpha * c.u - mx).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(mx.cwiseProduct(mx).dot(d.p_x), c.u.squaredNorm(), 1e-12);
    EXPECT_LE((d.beta * c.v - my).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(my.cwiseProduct(my).dot(d.p_y), c.v.squaredNorm(), 1e-12);
  }
}

TEST(SigmaDirect, BasicIdentities) {
  std::mt19937_64 gen(7);
  const JointMeasure p = random_measure(4, 4, gen);
  const TestFunction h = random_h(4, 4, gen);
  EXPECT_NEAR(dbal::sigma_k_direct(p, h, 0), dbal::variance(p, h), 1e-15);
  const double mean = dbal::expectation(p, h);
  const Vector mx = dbal::conditional_mean_x(p, h).array() - mean;
  EXPECT_NEAR(dbal::sigma_k_direct(p, h, 1),
              dbal::variance(p, h) - mx.cwiseProduct(mx).dot(dbal::marginal_x(p)), 1e-14);
  for (int k = 0; k <= 6; ++k) {
    for (Order order : {Order::XFirst, Order::YFirst}) {
      EXPECT_NEAR(dbal::sigma_k_direct(p, h, k, order),
                  oracle::sigma_k_sq(oracle::to_grid(p.weights()),
                                     oracle::to_grid(h.values()), k,
                                     order == Order::XFirst),
                  1e-14);
    }
  }
}

TEST(SigmaDirect, ProductCornerIndicator) {
  const JointMeasure p = dbal::two_by_two_measure(0.0);
  EXPECT_NEAR(dbal::sigma_k_direct(p, corner_indicator(), 0), 3.0 / 16, 1e-16);
  EXPECT_NEAR(dbal::sigma_k_direct(p, corner_indicator(), 2, Order::XFirst), 1.0 / 16,
              1e-16);
  EXPECT_NEAR(dbal::sigma_k_direct(p, corner_indicator(), 2, Order::YFirst), 1.0 / 16,
              1e-16);
}

TEST(Prediction, MatchesDirectForBothOrders) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 3 + trial % 4;
    const std::size_t l = 3 + (trial / 4) % 4;
    const JointMeasure p = random_measure(m, l, gen, 0.02);
    const TestFunction h = random_h(m, l, gen);
    const auto d = dbal::decompose(p);
    const auto c = dbal::coordinates(p, h, d);
    const double s0 = dbal::variance(p, h);
    for (Order order : {Order::XFirst, Order::YFirst}) {
      for (int k = 1; k <= 12; ++k) {
        EXPECT_NEAR(dbal::predicted_reduction(d, c, k, order),
                    s0 - dbal::sigma_k_direct(p, h, k, order), 1e-9)
            << "k=" << k << " order=" << dbal::to_string(order);
      }
    }
  }
}

TEST(Prediction, TwoStepClosedForm) {
  std::mt19937_64 gen(9);
  const JointMeasure p = random_measure(4, 4, gen);
  const TestFunction h = random_h(4, 4, gen);
  const auto d = dbal::decompose(p);
  const auto c = dbal::coordinates(p, h, d);
  double expected = 0.0;
  for (Eigen::Index j = 1; j < d.rank(); ++j) {
    const double s = d.singular_values(j);
    expected += c.u(j) * c.u(j) + (c.v(j) - s * c.u(j)) * (c.v(j) - s * c.u(j));
  }
  // Y-first k = 2 applies C_X first: Var(C_Y C_X h)
  EXPECT_NEAR(dbal::predicted_reduction(d, c, 2, Order::YFirst), expected, 1e-12);
  const TestFunction twice = dbal::center_y(p, dbal::center_x(p, h));
  EXPECT_NEAR(dbal::variance(p, h) - dbal::variance(p, twice), expected, 1e-12);
}

TEST(Prediction, ProductCaseCollapses) {
  std::mt19937_64 gen(10);
  const auto a = oracle::random_simplex(3, gen);
  const auto b = oracle::random_simplex(4, gen);
  Matrix w(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = a[i] * b[j];
  const JointMeasure p(w);
  const TestFunction h = random_h(3, 4, gen);
  const auto d = dbal::decompose(p);
  const auto c = dbal::coordinates(p, h, d);
  const double mean = dbal::expectation(p, h);
  const Vector mx = dbal::conditional_mean_x(p, h).array() - mean;
  const Vector my = dbal::conditional_mean_y(p, h).array() - mean;
  const double both = mx.cwiseProduct(mx).dot(d.p_x) + my.cwiseProduct(my).dot(d.p_y);
  for (int k = 2; k <= 6; ++k) EXPECT_NEAR(dbal::predicted_reduction(d, c, k), both, 1e-12);
  EXPECT_NEAR(dbal::sigma_gap(d, c), both, 1e-12);
}

TEST(Prediction, CornerIndicatorGap) {
  for (double s : {0.0, 0.1, 0.5, 0.9}) {
    const JointMeasure p = dbal::two_by_two_measure(s);
    const auto d = dbal::decompose(p);
    const auto c = dbal::coordinates(p, corner_indicator(), d);
    EXPECT_NEAR(dbal::sigma_gap(d, c), (1 + s) / 8, 1e-14);
    // brute force: sigma_k^2 for large k approaches sigma_0^2 - gap
    const double s0 = dbal::variance(p, corner_indicator());
    EXPECT_NEAR(s0 - dbal::sigma_k_direct(p, corner_indicator(), 400), (1 + s) / 8, 1e-12);
    if (s == 0.0) {
      EXPECT_NEAR(s0, 3.0 / 16, 1e-16);
      EXPECT_NEAR(s0 - dbal::sigma_gap(d, c), 1.0 / 16, 1e-15);
    }
  }
}

TEST(Prediction, CrossParityStepCanRise) {
  // h depends on x only: one X step removes all variance, the following Y
  // step (applied innermost) brings some back.
  const double s = 0.5;
  const JointMeasure p = dbal::two_by_two_measure(s);
  Matrix values(2, 2);
  values << 1.0, 1.0, 0.0, 0.0;
  const TestFunction h(values);
  EXPECT_NEAR(dbal::sigma_k_direct(p, h, 1), 0.0, 1e-16);
  EXPECT_NEAR(dbal::sigma_k_direct(p, h, 2), 0.046875, 1e-16);
  EXPECT_NEAR(oracle::sigma_k_sq(oracle::to_grid(p.weights()), oracle::to_grid(values), 2, true),
              0.046875, 1e-16);
  const auto pred = dbal::predict_variances(p, h, 4);
  EXPECT_GT(pred.sigma_k_sq[1], pred.sigma_k_sq[0]);
}

TEST(Prediction, MonotoneAndEvenRemainder) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const JointMeasure p = random_measure(4, 5, gen);
    const TestFunction h = random_h(4, 5, gen);
    for (Order order : {Order::XFirst, Order::YFirst}) {
      const auto pred = dbal::predict_variances(p, h, 12, order);
      EXPECT_LE(pred.sigma_k_sq[0], pred.sigma0_sq + 1e-15);
      // Nonincreasing along each parity class; see CrossParityStepCanRise.
      for (std::size_t k = 2; k < pred.sigma_k_sq.size(); ++k)
        EXPECT_LE(pred.sigma_k_sq[k], pred.sigma_k_sq[k - 2] + 1e-15);
      EXPECT_GE(pred.sigma_k_sq.back(), pred.sigma_limit_sq - 1e-15);
      EXPECT_GE(pred.sigma_limit_sq, -1e-15);

      const auto d = dbal::decompose(p);
      const auto c = dbal::coordinates(p, h, d);
      for (int k = 2; k <= 12; k += 2) {
        EXPECT_NEAR(dbal::sigma_k_direct(p, h, k, order) - pred.sigma_limit_sq,
                    dbal::even_step_remainder(d, c, k, order), 1e-12);
      }
    }
  }
}

TEST(Prediction, EvenRemainderContractsAtSFourth) {
  std::mt19937_64 gen(12);
  for (double s : {0.3, 0.6, 0.85}) {
    const JointMeasure p = dbal::spectrum_controlled_measure(5, s);
    const TestFunction h = random_h(5, 5, gen);
    const auto d = dbal::decompose(p);
    const auto c = dbal::coordinates(p, h, d);
    for (int k = 2; k <= 10; k += 2) {
      const double now = dbal::even_step_remainder(d, c, k);
      const double next = dbal::even_step_remainder(d, c, k + 2);
      EXPECT_NEAR(next / now, std::pow(s, 4), 1e-10);
    }
  }
}

TEST(Prediction, StepTwoRecursion) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 20; ++trial) {
    const JointMeasure p = random_measure(4, 4, gen);
    const TestFunction h = random_h(4, 4, gen);
    const auto d = dbal::decompose(p);
    const auto c = dbal::coordinates(p, h, d);
    const auto next =
        dbal::coordinates(p, dbal::center_y(p, dbal::center_x(p, h)), d);
    for (Eigen::Index j = 0; j < d.rank(); ++j) {
      const double s = d.singular_values(j);
      const double expected = j == 0 ? 0.0 : s * s * c.u(j) - s * c.v(j);
      EXPECT_NEAR(next.u(j), expected, 1e-9);
      EXPECT_NEAR(next.v(j), 0.0, 1e-9);
    }
  }
}

TEST(Prediction, GapPositiveForNonconstantConditionalMean) {
  std::mt19937_64 gen(14);
  for (int trial = 0; trial < 50; ++trial) {
    const JointMeasure p = random_measure(3, 4, gen);
    const TestFunction h = random_h(3, 4, gen);
    const auto d = dbal::decompose(p);
    EXPECT_GT(dbal::sigma_gap(d, dbal::coordinates(p, h, d)), 0.0);
  }
}

TEST(Prediction, NoGapRaisesOnlyWhereSingular) {
  // Y = X: s_2 = 1.
  Matrix w = Matrix::Zero(2, 2);
  w(0, 0) = 0.3;
  w(1, 1) = 0.7;
  const JointMeasure p(w);
  Matrix hv(2, 2);
  hv << 1.0, 2.0, -1.0, 0.5;
  const TestFunction h(hv);
  const auto d = dbal::decompose(p);
  EXPECT_NEAR(d.singular_values(1), 1.0, 1e-12);
  const auto c = dbal::coordinates(p, h, d);
  EXPECT_THROW(dbal::sigma_gap(d, c), dbal::SpectralGapViolation);
  EXPECT_THROW(dbal::even_step_remainder(d, c, 2), dbal::SpectralGapViolation);
  for (int k = 1; k <= 6; ++k) {
    EXPECT_NEAR(dbal::predicted_reduction(d, c, k),
                dbal::variance(p, h) - dbal::sigma_k_direct(p, h, k), 1e-12);
  }
}

}  // namespace
