#include "dbal/spectral.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <utility>

namespace dbal {
namespace {

void check_shape(const JointMeasure& p, const TestFunction& h) {
  if (h.rows() != p.rows() || h.cols() != p.cols()) {
    throw InvalidArgument("test function shape does not match the measure");
  }
}

void require_normalized(const JointMeasure& p) {
  if (!p.normalized()) throw InvalidArgument("measure must be normalized");
}

// Columns 1..n-1 of the Householder reflector mapping e_1 to the unit vector
// `a`: an orthonormal basis of the complement of a.
Matrix complement_basis(const Vector& a) {
  const Index n = a.size();
  Vector w = a;
  w(0) -= 1.0;
  const double norm = w.norm();
  Matrix h = Matrix::Identity(n, n);
  if (norm > 1e-300) {
    w /= norm;
    h -= 2.0 * w * w.transpose();
  }
  return h.rightCols(n - 1);
}

// 1 + s^2 + ... + s^{2(terms - 1)}.
double geometric_sum(double s, int terms) {
  double total = 0.0;
  double power = 1.0;
  for (int i = 0; i < terms; ++i) {
    total += power;
    power *= s * s;
  }
  return total;
}

/// Singular values and coordinates padded with zeros to max(m, l) entries.
/// Basis functions beyond min(m, l) have s = 0 and a coordinate on one axis
/// only.
struct Padded {
  Vector s;
  Vector u;
  Vector v;
};

Padded pad(const SpectralDecomposition& decomposition,
           const FunctionCoordinates& coords) {
  const Index size = std::max(coords.u.size(), coords.v.size());
  Padded out{Vector::Zero(size), Vector::Zero(size), Vector::Zero(size)};
  out.s.head(decomposition.rank()) = decomposition.singular_values;
  out.u.head(coords.u.size()) = coords.u;
  out.v.head(coords.v.size()) = coords.v;
  return out;
}

/// Coordinates on the axis balanced at step k (inner) and on the other axis.
std::pair<Vector, Vector> split(const Padded& padded, int k, Order order) {
  if (step_axis(order, k) == Axis::X) return {padded.u, padded.v};
  return {padded.v, padded.u};
}

void check_gap(const SpectralDecomposition& decomposition) {
  for (Index j = 1; j < decomposition.rank(); ++j) {
    if (decomposition.singular_values(j) >= 1.0 - kSpectralGapTolerance) {
      throw SpectralGapViolation("singular value s_" + std::to_string(j + 1) +
                                 " equals one; no spectral gap");
    }
  }
}

}  // namespace

Vector conditional_mean_x(const JointMeasure& p, const TestFunction& h) {
  check_shape(p, h);
  const Vector p_x = marginal_x(p);
  Vector result(p.rows());
  for (Index x = 0; x < p.rows(); ++x) {
    if (!(p_x(x) > 0.0)) {
      throw ZeroMarginal("conditional mean given X undefined at x = " +
                         p.x_labels()[static_cast<std::size_t>(x)]);
    }
    result(x) = p.weights().row(x).dot(h.values().row(x)) / p_x(x);
  }
  return result;
}

Vector conditional_mean_y(const JointMeasure& p, const TestFunction& h) {
  check_shape(p, h);
  const Vector p_y = marginal_y(p);
  Vector result(p.cols());
  for (Index y = 0; y < p.cols(); ++y) {
    if (!(p_y(y) > 0.0)) {
      throw ZeroMarginal("conditional mean given Y undefined at y = " +
                         p.y_labels()[static_cast<std::size_t>(y)]);
    }
    result(y) = p.weights().col(y).dot(h.values().col(y)) / p_y(y);
  }
  return result;
}

TestFunction lift_x(const Vector& f, Index cols) {
  return TestFunction(f * Eigen::RowVectorXd::Ones(cols));
}

TestFunction lift_y(const Vector& g, Index rows) {
  return TestFunction(Vector::Ones(rows) * g.transpose());
}

TestFunction center_x(const JointMeasure& p, const TestFunction& h) {
  return TestFunction(h.values() -
                      lift_x(conditional_mean_x(p, h), p.cols()).values());
}

TestFunction center_y(const JointMeasure& p, const TestFunction& h) {
  return TestFunction(h.values() -
                      lift_y(conditional_mean_y(p, h), p.rows()).values());
}

TestFunction center(const JointMeasure& p, const TestFunction& h, Axis axis) {
  return axis == Axis::X ? center_x(p, h) : center_y(p, h);
}

double variance(const JointMeasure& p, const TestFunction& h) {
  require_normalized(p);
  const double mean = expectation(p, h);
  return (p.weights().array() * (h.values().array() - mean).square()).sum();
}

SpectralDecomposition decompose(const JointMeasure& p) {
  require_normalized(p);
  SpectralDecomposition result;
  result.p_x = marginal_x(p);
  result.p_y = marginal_y(p);
  if ((result.p_x.array() <= 0.0).any() || (result.p_y.array() <= 0.0).any()) {
    throw ZeroMarginal("decomposition needs strictly positive marginals");
  }
  const Index m = p.rows();
  const Index l = p.cols();
  const Index r = std::min(m, l);

  const Vector sqrt_x = result.p_x.cwiseSqrt();
  const Vector sqrt_y = result.p_y.cwiseSqrt();
  const Matrix normalized = sqrt_x.cwiseInverse().asDiagonal() * p.weights() *
                            sqrt_y.cwiseInverse().asDiagonal();

  result.singular_values = Vector::Zero(r);
  result.alpha = Matrix::Zero(m, m);
  result.beta = Matrix::Zero(l, l);
  result.singular_values(0) = 1.0;
  result.alpha.col(0).setOnes();
  result.beta.col(0).setOnes();

  const auto orient = [](Vector v) {
    Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    return v(pivot) < 0.0 ? Vector(-v) : v;
  };
  const Matrix basis_x = complement_basis(sqrt_x / sqrt_x.norm());
  const Matrix basis_y = complement_basis(sqrt_y / sqrt_y.norm());
  if (r == 1) {
    for (Index j = 1; j < m; ++j) result.alpha.col(j) = orient(basis_x.col(j - 1).cwiseQuotient(sqrt_x));
    for (Index j = 1; j < l; ++j) result.beta.col(j) = orient(basis_y.col(j - 1).cwiseQuotient(sqrt_y));
    return result;
  }
  const Matrix reduced = basis_x.transpose() * normalized * basis_y;
  Eigen::JacobiSVD<Matrix> svd(reduced, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix left = basis_x * svd.matrixU();
  const Matrix right = basis_y * svd.matrixV();

  for (Index j = 1; j < r; ++j) {
    Vector a = left.col(j - 1).cwiseQuotient(sqrt_x);
    Vector b = right.col(j - 1).cwiseQuotient(sqrt_y);
    Index pivot = 0;
    a.cwiseAbs().maxCoeff(&pivot);
    if (a(pivot) < 0.0) {
      a = -a;
      b = -b;
    }
    result.singular_values(j) = svd.singularValues()(j - 1);
    result.alpha.col(j) = a;
    result.beta.col(j) = b;
  }
  // Unpaired directions on the longer axis, all with singular value 0.
  for (Index j = r; j < m; ++j) result.alpha.col(j) = orient(left.col(j - 1).cwiseQuotient(sqrt_x));
  for (Index j = r; j < l; ++j) result.beta.col(j) = orient(right.col(j - 1).cwiseQuotient(sqrt_y));
  return result;
}

FunctionCoordinates coordinates(const JointMeasure& p, const TestFunction& h,
                                const SpectralDecomposition& decomposition) {
  const double mean = expectation(p, h);
  const TestFunction centred(h.values().array() - mean);
  const Vector mu_x = conditional_mean_x(p, centred);
  const Vector mu_y = conditional_mean_y(p, centred);
  FunctionCoordinates coords;
  coords.u = decomposition.alpha.transpose() *
             mu_x.cwiseProduct(decomposition.p_x);
  coords.v = decomposition.beta.transpose() *
             mu_y.cwiseProduct(decomposition.p_y);
  return coords;
}

double sigma_k_direct(const JointMeasure& p, const TestFunction& h, int k,
                      Order order) {
  if (k < 0) throw InvalidArgument("k must be >= 0");
  TestFunction g = h;
  for (int step = k; step >= 1; --step) {
    g = center(p, g, step_axis(order, step));
  }
  return variance(p, g);
}

double predicted_reduction(const SpectralDecomposition& decomposition,
                           const FunctionCoordinates& coords, int k,
                           Order order) {
  if (k < 0) throw InvalidArgument("k must be >= 0");
  if (k == 0) return 0.0;
  const Padded padded = pad(decomposition, coords);
  const auto [inner, outer] = split(padded, k, order);
  double total = 0.0;
  for (Index j = 1; j < padded.s.size(); ++j) {
    const double s = padded.s(j);
    const double cross = outer(j) - s * inner(j);
    total += inner(j) * inner(j) + cross * cross * geometric_sum(s, k - 1);
  }
  return total;
}

double sigma_gap(const SpectralDecomposition& decomposition,
                 const FunctionCoordinates& coords) {
  check_gap(decomposition);
  const Padded padded = pad(decomposition, coords);
  double total = 0.0;
  for (Index j = 1; j < padded.s.size(); ++j) {
    const double s = padded.s(j);
    const double cross = padded.v(j) - s * padded.u(j);
    total += padded.u(j) * padded.u(j) + cross * cross / (1.0 - s * s);
  }
  return total;
}

double even_step_remainder(const SpectralDecomposition& decomposition,
                           const FunctionCoordinates& coords, int k,
                           Order order) {
  if (k < 2 || k % 2 != 0) throw InvalidArgument("k must be even and >= 2");
  check_gap(decomposition);
  const Padded padded = pad(decomposition, coords);
  const auto [inner, outer] = split(padded, k, order);
  double total = 0.0;
  for (Index j = 1; j < padded.s.size(); ++j) {
    const double s = padded.s(j);
    const double cross = outer(j) - s * inner(j);
    total += s * s * cross * cross / (1.0 - s * s) * std::pow(s, 2 * (k - 2));
  }
  return total;
}

VariancePrediction predict_variances(const JointMeasure& p,
                                     const TestFunction& h, int max_k,
                                     Order order) {
  const SpectralDecomposition decomposition = decompose(p);
  const FunctionCoordinates coords = coordinates(p, h, decomposition);
  VariancePrediction prediction;
  prediction.sigma0_sq = variance(p, h);
  for (int k = 1; k <= max_k; ++k) {
    prediction.sigma_k_sq.push_back(
        prediction.sigma0_sq -
        predicted_reduction(decomposition, coords, k, order));
  }
  prediction.sigma_gap_sq = sigma_gap(decomposition, coords);
  prediction.sigma_limit_sq = prediction.sigma0_sq - prediction.sigma_gap_sq;
  return prediction;
}

}  // namespace dbal
