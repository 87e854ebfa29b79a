#include "dbal/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "csv_util.hpp"
#include "dbal/errors.hpp"
#include "dbal/random.hpp"

namespace dbal {
namespace {

void check_labels(const Labels& labels, Index expected, const char* axis) {
  if (static_cast<Index>(labels.size()) != expected) {
    throw InvalidArgument(std::string(axis) + " label count does not match");
  }
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second) {
      throw InvalidArgument(std::string("duplicate ") + axis +
                            " label: " + label);
    }
  }
}

void check_same_size(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("divergence inputs differ in size");
}

std::span<const double> flat(const JointMeasure& q) {
  return {q.weights().data(), static_cast<std::size_t>(q.weights().size())};
}

std::span<const double> flat(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

void check_same_shape(const JointMeasure& q, const JointMeasure& r) {
  if (q.rows() != r.rows() || q.cols() != r.cols()) {
    throw InvalidArgument("measures differ in shape");
  }
}

}  // namespace

Labels default_labels(const std::string& prefix, Index count) {
  Labels labels;
  labels.reserve(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i) labels.push_back(prefix + std::to_string(i));
  return labels;
}

JointMeasure::JointMeasure(Matrix weights)
    : JointMeasure(weights, default_labels("x", weights.rows()),
                   default_labels("y", weights.cols())) {}

JointMeasure::JointMeasure(Matrix weights, Labels x_labels, Labels y_labels)
    : weights_(std::move(weights)),
      x_labels_(std::move(x_labels)),
      y_labels_(std::move(y_labels)) {
  if (weights_.rows() < 1 || weights_.cols() < 1) {
    throw InvalidArgument("joint measure needs at least one atom per axis");
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw InvalidArgument("joint measure weights must be finite and >= 0");
  }
  check_labels(x_labels_, weights_.rows(), "x");
  check_labels(y_labels_, weights_.cols(), "y");
  normalized_ = std::abs(weights_.sum() - 1.0) <= kNormalizationTolerance;
}

JointMeasure JointMeasure::normalize() const {
  const double mass = total_mass();
  if (!(mass > 0.0)) throw InvalidArgument("cannot normalize a zero measure");
  return with_weights(weights_ / mass);
}

JointMeasure JointMeasure::with_weights(Matrix weights) const {
  if (weights.rows() != rows() || weights.cols() != cols()) {
    throw InvalidArgument("replacement weights differ in shape");
  }
  return JointMeasure(std::move(weights), x_labels_, y_labels_);
}

void validate_probability_vector(const Vector& v, const std::string& name,
                                 bool strictly_positive) {
  if (v.size() < 1) throw InvalidArgument(name + " is empty");
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw InvalidArgument(name + " has negative or non-finite entries");
  }
  if (strictly_positive && (v.array() <= 0.0).any()) {
    throw InvalidArgument(name + " must be strictly positive");
  }
  if (std::abs(v.sum() - 1.0) > kNormalizationTolerance) {
    throw InvalidArgument(name + " does not sum to one");
  }
}

TargetMarginals::TargetMarginals(Vector p_x, Vector p_y)
    : p_x_(std::move(p_x)), p_y_(std::move(p_y)) {
  validate_probability_vector(p_x_, "P_X", true);
  validate_probability_vector(p_y_, "P_Y", true);
}

TargetMarginals TargetMarginals::of(const JointMeasure& measure) {
  return TargetMarginals(marginal_x(measure), marginal_y(measure));
}

double TargetMarginals::p_star() const noexcept {
  return std::min(p_x_.minCoeff(), p_y_.minCoeff());
}

JointMeasure EmpiricalSample::to_measure() const {
  if (n <= 0) throw InvalidArgument("empty sample");
  return JointMeasure(counts.cast<double>() / static_cast<double>(n),
                      x_labels.empty() ? default_labels("x", counts.rows()) : x_labels,
                      y_labels.empty() ? default_labels("y", counts.cols()) : y_labels);
}

Vector EmpiricalSample::row_counts() const {
  return counts.cast<double>().rowwise().sum();
}

Vector EmpiricalSample::col_counts() const {
  return counts.cast<double>().colwise().sum().transpose();
}

Vector marginal_x(const JointMeasure& q) { return q.weights().rowwise().sum(); }

Vector marginal_y(const JointMeasure& q) {
  return q.weights().colwise().sum().transpose();
}

double expectation(const JointMeasure& q, const TestFunction& h) {
  if (h.rows() != q.rows() || h.cols() != q.cols()) {
    throw InvalidArgument("test function shape does not match the measure");
  }
  return (q.weights().array() * h.values().array()).sum();
}

double kl_divergence(std::span<const double> q, std::span<const double> r) {
  check_same_size(q.size(), r.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (r[i] == 0.0) {
      throw AbsoluteContinuityViolation(
          "KL: Q has mass where R has none (cell " + std::to_string(i) + ")");
    }
    total += q[i] * std::log(q[i] / r[i]);
  }
  return total;
}

double kl_divergence(const Vector& q, const Vector& r) {
  return kl_divergence(flat(q), flat(r));
}

double kl_divergence(const JointMeasure& q, const JointMeasure& r) {
  check_same_shape(q, r);
  return kl_divergence(flat(q), flat(r));
}

double chi2_divergence(std::span<const double> q, std::span<const double> r) {
  check_same_size(q.size(), r.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (r[i] == 0.0) {
      if (q[i] == 0.0) continue;
      throw AbsoluteContinuityViolation(
          "chi2: Q has mass where R has none (cell " + std::to_string(i) +
          ")");
    }
    const double diff = q[i] - r[i];
    total += diff * diff / r[i];
  }
  return total;
}

double chi2_divergence(const Vector& q, const Vector& r) {
  return chi2_divergence(flat(q), flat(r));
}

double chi2_divergence(const JointMeasure& q, const JointMeasure& r) {
  check_same_shape(q, r);
  return chi2_divergence(flat(q), flat(r));
}

double tv_distance(std::span<const double> q, std::span<const double> r) {
  check_same_size(q.size(), r.size());
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) total += std::abs(q[i] - r[i]);
  return 0.5 * total;
}

double tv_distance(const Vector& q, const Vector& r) {
  return tv_distance(flat(q), flat(r));
}

double tv_distance(const JointMeasure& q, const JointMeasure& r) {
  check_same_shape(q, r);
  return tv_distance(flat(q), flat(r));
}

EmpiricalSample sample_empirical(const JointMeasure& p, std::int64_t n,
                                 std::uint64_t seed) {
  if (n <= 0) throw InvalidArgument("sample size must be positive");
  if (!p.normalized()) throw InvalidArgument("sampling needs a normalized measure");

  Rng rng(seed);
  EmpiricalSample sample;
  sample.counts = CountMatrix::Zero(p.rows(), p.cols());
  sample.n = n;
  sample.x_labels = p.x_labels();
  sample.y_labels = p.y_labels();

  std::int64_t remaining = n;
  double remaining_mass = 1.0;
  const Index cells = p.rows() * p.cols();
  for (Index c = 0; c < cells && remaining > 0; ++c) {
    const Index x = c / p.cols();
    const Index y = c % p.cols();
    const double mass = p(x, y);
    std::int64_t draw;
    if (c == cells - 1 || mass >= remaining_mass) {
      draw = mass > 0.0 ? remaining : 0;
    } else {
      draw = rng.binomial(remaining, mass / remaining_mass);
    }
    sample.counts(x, y) = draw;
    remaining -= draw;
    remaining_mass -= mass;
  }
  // Roundoff can leave the tail mass a hair above zero after the last
  // positive cell; hand any leftover to the last positive cell.
  if (remaining > 0) {
    for (Index c = cells - 1; c >= 0; --c) {
      if (p(c / p.cols(), c % p.cols()) > 0.0) {
        sample.counts(c / p.cols(), c % p.cols()) += remaining;
        break;
      }
    }
  }
  return sample;
}

bool support_event(const EmpiricalSample& sample,
                   const TargetMarginals& targets) {
  if (sample.counts.rows() != targets.p_x().size() ||
      sample.counts.cols() != targets.p_y().size()) {
    throw InvalidArgument("sample and targets differ in shape");
  }
  const Vector rows = sample.row_counts();
  const Vector cols = sample.col_counts();
  for (Index i = 0; i < rows.size(); ++i) {
    if (targets.p_x()(i) > 0.0 && rows(i) <= 0.0) return false;
  }
  for (Index j = 0; j < cols.size(); ++j) {
    if (targets.p_y()(j) > 0.0 && cols(j) <= 0.0) return false;
  }
  return true;
}

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_table_csv(std::ostream& out, const Matrix& values,
                     const Labels& x_labels, const Labels& y_labels) {
  check_labels(x_labels, values.rows(), "x");
  check_labels(y_labels, values.cols(), "y");
  for (const auto& label : y_labels) out << ',' << detail::csv_escape(label);
  out << '\n';
  for (Index x = 0; x < values.rows(); ++x) {
    out << detail::csv_escape(x_labels[static_cast<std::size_t>(x)]);
    for (Index y = 0; y < values.cols(); ++y) {
      out << ',' << format_real(values(x, y));
    }
    out << '\n';
  }
}

LabeledTable read_table_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields) || fields.size() < 2) {
    throw ParseError("table CSV needs a header row of column labels");
  }
  LabeledTable table;
  for (std::size_t j = 1; j < fields.size(); ++j) {
    table.y_labels.push_back(detail::trim(fields[j]));
  }
  std::vector<std::vector<double>> rows;
  while (detail::read_csv_record(in, fields)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() != table.y_labels.size() + 1) {
      throw ParseError("table CSV row " + std::to_string(rows.size() + 1) +
                       " has the wrong number of fields");
    }
    table.x_labels.push_back(detail::trim(fields[0]));
    std::vector<double> row;
    for (std::size_t j = 1; j < fields.size(); ++j) {
      row.push_back(detail::parse_real(fields[j], "table CSV"));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("table CSV has no rows");
  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.y_labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < table.y_labels.size(); ++j) {
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

void write_measure_csv(std::ostream& out, const JointMeasure& measure) {
  write_table_csv(out, measure.weights(), measure.x_labels(), measure.y_labels());
}

JointMeasure read_measure_csv(std::istream& in) {
  LabeledTable table = read_table_csv(in);
  try {
    return JointMeasure(std::move(table.values), std::move(table.x_labels),
                        std::move(table.y_labels));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("measure CSV: ") + e.what());
  }
}

void write_vector_csv(std::ostream& out, const Labels& labels,
                      const Vector& values) {
  if (static_cast<Index>(labels.size()) != values.size()) {
    throw InvalidArgument("vector and label counts differ");
  }
  out << "label,value\n";
  for (Index i = 0; i < values.size(); ++i) {
    out << detail::csv_escape(labels[static_cast<std::size_t>(i)]) << ','
        << format_real(values(i)) << '\n';
  }
}

LabeledVector read_vector_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!detail::read_csv_record(in, fields)) {
    throw ParseError("vector CSV is empty");
  }
  LabeledVector result;
  std::vector<double> values;
  while (detail::read_csv_record(in, fields)) {
    if (fields.size() == 1 && detail::trim(fields[0]).empty()) continue;
    if (fields.size() != 2) throw ParseError("vector CSV rows need 2 fields");
    result.labels.push_back(detail::trim(fields[0]));
    values.push_back(detail::parse_real(fields[1], "vector CSV"));
  }
  result.values = Eigen::Map<Vector>(values.data(),
                                     static_cast<Index>(values.size()));
  return result;
}

}  // namespace dbal
