#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dbal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CountMatrix =
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Mass tolerance used for every "sums to one" invariant.
inline constexpr double kNormalizationTolerance = 1e-12;

using Labels = std::vector<std::string>;

/// Labels "<prefix>0" ... "<prefix>(count-1)".
Labels default_labels(const std::string& prefix, Index count);

/// Nonnegative m x l weights over labeled atoms. Immutable after
/// construction; normalized() reports whether the total mass is within
/// kNormalizationTolerance of one.
class JointMeasure {
 public:
  explicit JointMeasure(Matrix weights);
  JointMeasure(Matrix weights, Labels x_labels, Labels y_labels);

  const Matrix& weights() const noexcept { return weights_; }
  double operator()(Index x, Index y) const { return weights_(x, y); }
  Index rows() const noexcept { return weights_.rows(); }
  Index cols() const noexcept { return weights_.cols(); }
  const Labels& x_labels() const noexcept { return x_labels_; }
  const Labels& y_labels() const noexcept { return y_labels_; }
  bool normalized() const noexcept { return normalized_; }
  double total_mass() const noexcept { return weights_.sum(); }

  /// Same atoms, total mass one. Throws InvalidArgument on zero mass.
  JointMeasure normalize() const;

  /// Same labels, new weights of the same shape.
  JointMeasure with_weights(Matrix weights) const;

 private:
  Matrix weights_;
  Labels x_labels_;
  Labels y_labels_;
  bool normalized_ = false;
};

/// Strictly positive target marginals (P_X, P_Y).
class TargetMarginals {
 public:
  TargetMarginals(Vector p_x, Vector p_y);

  /// Marginals of a normalized measure; throws if any is zero.
  static TargetMarginals of(const JointMeasure& measure);

  const Vector& p_x() const noexcept { return p_x_; }
  const Vector& p_y() const noexcept { return p_y_; }
  double p_star() const noexcept;

 private:
  Vector p_x_;
  Vector p_y_;
};

/// Cell counts of n i.i.d. draws.
struct EmpiricalSample {
  CountMatrix counts;
  std::int64_t n = 0;
  Labels x_labels;
  Labels y_labels;

  /// Empty label lists fall back to default_labels.
  JointMeasure to_measure() const;
  Vector row_counts() const;
  Vector col_counts() const;
};

/// A real function on the product space, stored as an m x l table.
class TestFunction {
 public:
  explicit TestFunction(Matrix values) : values_(std::move(values)) {}

  const Matrix& values() const noexcept { return values_; }
  double operator()(Index x, Index y) const { return values_(x, y); }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double sup_norm() const { return values_.cwiseAbs().maxCoeff(); }

 private:
  Matrix values_;
};

Vector marginal_x(const JointMeasure& q);
Vector marginal_y(const JointMeasure& q);

/// E_Q[h] = sum of Q(x, y) h(x, y).
double expectation(const JointMeasure& q, const TestFunction& h);

/// Checks entries >= 0 and sum within kNormalizationTolerance of one;
/// with strictly_positive also every entry > 0.
void validate_probability_vector(const Vector& v, const std::string& name,
                                 bool strictly_positive);

// Divergences use natural logarithms and the cell-wise conventions
// 0 log 0 = 0 and 0 (0/0) = 0. Inputs must have equal sizes.
double kl_divergence(std::span<const double> q, std::span<const double> r);
double kl_divergence(const Vector& q, const Vector& r);
double kl_divergence(const JointMeasure& q, const JointMeasure& r);

double chi2_divergence(std::span<const double> q, std::span<const double> r);
double chi2_divergence(const Vector& q, const Vector& r);
double chi2_divergence(const JointMeasure& q, const JointMeasure& r);

double tv_distance(std::span<const double> q, std::span<const double> r);
double tv_distance(const Vector& q, const Vector& r);
double tv_distance(const JointMeasure& q, const JointMeasure& r);

/// Multinomial(n, P) draw by sequential binomial conditioning over cells in
/// row-major order. Pure function of (P, n, seed).
EmpiricalSample sample_empirical(const JointMeasure& p, std::int64_t n,
                                 std::uint64_t seed);

/// True iff every atom with positive target mass has a positive count on
/// both axes.
bool support_event(const EmpiricalSample& sample,
                   const TargetMarginals& targets);

// CSV: a header row of y labels (first cell empty), then one row per x atom
// with its label in column 0. Values carry 17 significant digits.
void write_measure_csv(std::ostream& out, const JointMeasure& measure);
JointMeasure read_measure_csv(std::istream& in);

/// A signed table with row and column labels (test functions, score
/// matrices). Same CSV layout as a measure.
struct LabeledTable {
  Matrix values;
  Labels x_labels;
  Labels y_labels;
};

void write_table_csv(std::ostream& out, const Matrix& values,
                     const Labels& x_labels, const Labels& y_labels);
LabeledTable read_table_csv(std::istream& in);

struct LabeledVector {
  Labels labels;
  Vector values;
};

// Vector CSV: header "label,value", then one "label,value" row per atom.
void write_vector_csv(std::ostream& out, const Labels& labels,
                      const Vector& values);
LabeledVector read_vector_csv(std::istream& in);

/// printf "%.17g"; parses back to the identical double.
std::string format_real(double value);

}  // namespace dbal
