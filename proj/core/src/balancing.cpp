#include "dbal/balancing.hpp"

#include <algorithm>
#include <cmath>

namespace dbal {
namespace {

const Vector& target_for(const TargetMarginals& targets, Axis axis) {
  return axis == Axis::X ? targets.p_x() : targets.p_y();
}

Vector axis_marginal(const JointMeasure& q, Axis axis) {
  return axis == Axis::X ? marginal_x(q) : marginal_y(q);
}

void check_target(const JointMeasure& q, const Vector& target, Axis axis) {
  const Index expected = axis == Axis::X ? q.rows() : q.cols();
  if (target.size() != expected) {
    throw InvalidArgument("target length does not match the " +
                          to_string(axis) + " axis");
  }
  if (!target.allFinite() || (target.array() < 0.0).any()) {
    throw InvalidArgument("target must be finite and nonnegative");
  }
}

double ratio_deviation(const Vector& target, const Vector& marginal) {
  double worst = 0.0;
  for (Index i = 0; i < target.size(); ++i) {
    if (target(i) == 0.0 && marginal(i) == 0.0) continue;
    worst = std::max(worst, std::abs(target(i) / marginal(i) - 1.0));
  }
  return worst;
}

// KL: Q*(x, y) = P_X(x) R_{Y|X}(y | x).
Matrix project_kl(const Matrix& r, const Vector& target) {
  Matrix q = Matrix::Zero(r.rows(), r.cols());
  for (Index x = 0; x < r.rows(); ++x) {
    const double mass = r.row(x).sum();
    if (mass == 0.0) continue;
    for (Index y = 0; y < r.cols(); ++y) {
      q(x, y) = target(x) * (r(x, y) / mass);
    }
  }
  return q;
}

// Reverse KL: minimizing the cross entropy -sum R log Q splits into
// -sum R_X log Q_X (fixed by the constraint) plus the R_X-weighted cross
// entropy of the conditionals, so Q_X = P_X and Q_{Y|X} = R_{Y|X}.
Matrix project_reverse_kl(const Matrix& r, const Vector& target) {
  const Vector r_x = r.rowwise().sum();
  Matrix conditional = Matrix::Zero(r.rows(), r.cols());
  for (Index x = 0; x < r.rows(); ++x) {
    if (r_x(x) > 0.0) conditional.row(x) = r.row(x) / r_x(x);
  }
  return target.asDiagonal() * conditional;
}

// chi2: Q* = xi* R with xi* = C_X^R (1 - f) + f, where f(x) = P_X / R_X on
// the support of R_X (1 elsewhere) and C_X^R centres by the R-conditional
// mean given x.
Matrix project_chi2(const Matrix& r, const Vector& target) {
  const Index m = r.rows();
  const Index l = r.cols();
  const Vector r_x = r.rowwise().sum();
  Matrix f = Matrix::Ones(m, l);
  for (Index x = 0; x < m; ++x) {
    if (r_x(x) > 0.0) f.row(x).setConstant(target(x) / r_x(x));
  }
  const Matrix g = Matrix::Ones(m, l) - f;
  Matrix xi(m, l);
  for (Index x = 0; x < m; ++x) {
    double conditional_mean = 0.0;
    if (r_x(x) > 0.0) {
      for (Index y = 0; y < l; ++y) conditional_mean += g(x, y) * r(x, y);
      conditional_mean /= r_x(x);
    }
    for (Index y = 0; y < l; ++y) {
      xi(x, y) = (g(x, y) - conditional_mean) + f(x, y);
    }
  }
  return xi.cwiseProduct(r);
}

void check_absolute_continuity(const Vector& target, const Vector& marginal,
                               Axis axis) {
  for (Index i = 0; i < target.size(); ++i) {
    if (target(i) > 0.0 && marginal(i) == 0.0) {
      throw AbsoluteContinuityViolation(
          "target puts mass on " + to_string(axis) + " atom " +
          std::to_string(i) + " which the reference measure does not charge");
    }
  }
}

}  // namespace

Axis step_axis(Order order, int step) {
  const bool odd = step % 2 == 1;
  if (order == Order::XFirst) return odd ? Axis::X : Axis::Y;
  return odd ? Axis::Y : Axis::X;
}

Axis other(Axis axis) { return axis == Axis::X ? Axis::Y : Axis::X; }

std::string to_string(Axis axis) { return axis == Axis::X ? "x" : "y"; }

std::string to_string(Order order) {
  return order == Order::XFirst ? "x-first" : "y-first";
}

std::string to_string(Divergence divergence) {
  switch (divergence) {
    case Divergence::KL:
      return "kl";
    case Divergence::ReverseKL:
      return "reverse-kl";
    case Divergence::Chi2:
      return "chi2";
  }
  return "?";
}

Order parse_order(const std::string& text) {
  if (text == "x-first") return Order::XFirst;
  if (text == "y-first") return Order::YFirst;
  throw InvalidArgument("unknown order: " + text);
}

Divergence parse_divergence(const std::string& text) {
  if (text == "kl") return Divergence::KL;
  if (text == "reverse-kl") return Divergence::ReverseKL;
  if (text == "chi2") return Divergence::Chi2;
  throw InvalidArgument("unknown divergence: " + text);
}

JointMeasure balance_step(const JointMeasure& q, const Vector& target,
                          Axis axis) {
  check_target(q, target, axis);
  Matrix w = q.weights();
  if (axis == Axis::X) {
    for (Index x = 0; x < w.rows(); ++x) {
      const double mass = w.row(x).sum();
      if (mass > 0.0) {
        w.row(x) *= target(x) / mass;
      } else if (target(x) > 0.0) {
        throw EmptyMarginalCell("x", static_cast<std::size_t>(x));
      }
    }
  } else {
    for (Index y = 0; y < w.cols(); ++y) {
      const double mass = w.col(y).sum();
      if (mass > 0.0) {
        w.col(y) *= target(y) / mass;
      } else if (target(y) > 0.0) {
        throw EmptyMarginalCell("y", static_cast<std::size_t>(y));
      }
    }
  }
  return q.with_weights(std::move(w));
}

JointMeasure balance_step(const JointMeasure& q,
                          const TargetMarginals& targets, Axis axis) {
  return balance_step(q, target_for(targets, axis), axis);
}

JointMeasure project_marginal(const JointMeasure& r, const Vector& target,
                              Axis axis, Divergence divergence) {
  check_target(r, target, axis);
  check_absolute_continuity(target, axis_marginal(r, axis), axis);
  // Solve on rows; a Y projection is the X projection of the transpose.
  const Matrix rows_first =
      axis == Axis::X ? r.weights() : Matrix(r.weights().transpose());
  Matrix q;
  switch (divergence) {
    case Divergence::KL:
      q = project_kl(rows_first, target);
      break;
    case Divergence::ReverseKL:
      q = project_reverse_kl(rows_first, target);
      break;
    case Divergence::Chi2:
      q = project_chi2(rows_first, target);
      break;
  }
  if (axis == Axis::Y) q.transposeInPlace();
  return r.with_weights(std::move(q));
}

BalanceTrace balance_k(const JointMeasure& q, const TargetMarginals& targets,
                       int k, Order order,
                       std::optional<Divergence> projection) {
  if (k < 0) throw InvalidArgument("iteration count must be >= 0");
  if (q.rows() != targets.p_x().size() || q.cols() != targets.p_y().size()) {
    throw InvalidArgument("measure and targets differ in shape");
  }
  BalanceTrace trace{.iterates = {q},
                     .ratio_bounds = {},
                     .kl_violations = {},
                     .order = order,
                     .targets = targets};
  trace.iterates.reserve(static_cast<std::size_t>(k) + 1);
  for (int step = 1; step <= k; ++step) {
    const Axis axis = step_axis(order, step);
    const JointMeasure& previous = trace.iterates.back();
    const Vector& target = target_for(targets, axis);
    trace.ratio_bounds.push_back(
        ratio_deviation(target, axis_marginal(previous, axis)));
    trace.iterates.push_back(
        projection ? project_marginal(previous, target, axis, *projection)
                   : balance_step(previous, target, axis));
  }
  trace.kl_violations = kl_violation_sequence(trace);
  return trace;
}

JointMeasure balance_final(const JointMeasure& q,
                           const TargetMarginals& targets, int k,
                           Order order) {
  if (k < 0) throw InvalidArgument("iteration count must be >= 0");
  JointMeasure current = q;
  for (int step = 1; step <= k; ++step) {
    current = balance_step(current, targets, step_axis(order, step));
  }
  return current;
}

NotConverged::NotConverged(JointMeasure last, int iterations,
                           double max_violation)
    : Error("balancing did not converge after " + std::to_string(iterations) +
            " steps (max marginal violation " + format_real(max_violation) +
            ")"),
      last_(std::move(last)),
      iterations_(iterations),
      max_violation_(max_violation) {}

double marginal_violation(const JointMeasure& q,
                          const TargetMarginals& targets) {
  const double dx = (marginal_x(q) - targets.p_x()).cwiseAbs().maxCoeff();
  const double dy = (marginal_y(q) - targets.p_y()).cwiseAbs().maxCoeff();
  return std::max(dx, dy);
}

ConvergenceResult balance_to_convergence(const JointMeasure& q,
                                         const TargetMarginals& targets,
                                         const ConvergenceOptions& options) {
  if (q.rows() != targets.p_x().size() || q.cols() != targets.p_y().size()) {
    throw InvalidArgument("measure and targets differ in shape");
  }
  JointMeasure current = q;
  double violation = marginal_violation(current, targets);
  int step = 0;
  while (violation > options.tol) {
    if (step >= options.max_iter) {
      throw NotConverged(std::move(current), step, violation);
    }
    ++step;
    const Axis axis = step_axis(options.order, step);
    const Vector& target = target_for(targets, axis);
    current = options.projection
                  ? project_marginal(current, target, axis, *options.projection)
                  : balance_step(current, target, axis);
    violation = marginal_violation(current, targets);
  }
  return {std::move(current), step, violation};
}

std::vector<double> kl_violation_sequence(const BalanceTrace& trace) {
  if (trace.iterates.empty()) throw InvalidArgument("empty balance trace");
  std::vector<double> sequence;
  sequence.reserve(trace.iterates.size());
  // The axis first balanced is the one whose violation opens the sequence.
  const Axis lead = step_axis(trace.order, 1);
  for (std::size_t l = 0; l < trace.iterates.size(); ++l) {
    const JointMeasure& iterate = trace.iterates[l];
    if (l % 2 == 0) {
      Vector marginal = axis_marginal(iterate, lead);
      if (l == 0) marginal /= marginal.sum();
      sequence.push_back(kl_divergence(marginal, target_for(trace.targets, lead)));
    } else {
      const Axis lag = other(lead);
      sequence.push_back(kl_divergence(target_for(trace.targets, lag),
                                       axis_marginal(iterate, lag)));
    }
  }
  return sequence;
}

bool is_nonincreasing(std::span<const double> values, double tol) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1] + tol) return false;
  }
  return true;
}

bool RatioBoundReport::all_hold() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const RatioBoundEntry& e) { return e.holds; });
}

RatioBoundReport marginal_ratio_bound(const BalanceTrace& trace,
                                      std::int64_t n, double slack) {
  if (n <= 0) throw InvalidArgument("sample size must be positive");
  RatioBoundReport report;
  report.p_star = trace.targets.p_star();
  const std::vector<double> violations = trace.kl_violations.empty()
                                             ? kl_violation_sequence(trace)
                                             : trace.kl_violations;
  report.initial_kl = violations.front();
  report.reference_kl = violations.size() > 1
                            ? std::max(violations[0], violations[1])
                            : violations[0];
  const double root = std::sqrt(0.5 * report.reference_kl);
  const double p_star_sq = report.p_star * report.p_star;
  const bool small_kl = report.reference_kl <= 0.5 * p_star_sq;

  for (std::size_t i = 0; i < trace.ratio_bounds.size(); ++i) {
    RatioBoundEntry entry;
    entry.step = static_cast<int>(i) + 1;
    entry.observed = trace.ratio_bounds[i];
    if (entry.step == 1) {
      entry.gross_envelope = std::max(static_cast<double>(n) - 1.0, 1.0);
      entry.kl_envelope = static_cast<double>(n) * root;
    } else {
      entry.gross_envelope = std::max(1.0 / p_star_sq - 1.0, 1.0);
      entry.kl_envelope = root / p_star_sq;
    }
    if (small_kl) entry.small_kl_envelope = 2.0 / report.p_star * root;

    const double bound = std::min(
        {entry.gross_envelope, entry.kl_envelope,
         entry.small_kl_envelope.value_or(entry.gross_envelope)});
    entry.holds = entry.observed <= bound * (1.0 + slack) + slack;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace dbal
