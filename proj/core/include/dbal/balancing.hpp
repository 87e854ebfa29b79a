#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbal/errors.hpp"
#include "dbal/measure.hpp"

namespace dbal {

enum class Axis { X, Y };

/// Which axis the first rescaling step fixes. XFirst: steps 1, 3, 5, ...
/// rescale rows and steps 2, 4, ... rescale columns.
enum class Order { XFirst, YFirst };

/// Divergence in which a single marginal projection is posed.
enum class Divergence { KL, ReverseKL, Chi2 };

/// Axis rescaled by the 1-based step `step` under `order`.
Axis step_axis(Order order, int step);

Axis other(Axis axis);
std::string to_string(Axis axis);
std::string to_string(Order order);
std::string to_string(Divergence divergence);
Order parse_order(const std::string& text);
Divergence parse_divergence(const std::string& text);

/// Rescales each row (axis X) or column (axis Y) of q so that the marginal
/// on that axis equals `target`. A zero row/column stays zero when its
/// target is zero and raises EmptyMarginalCell otherwise.
JointMeasure balance_step(const JointMeasure& q, const Vector& target,
                          Axis axis);
JointMeasure balance_step(const JointMeasure& q,
                          const TargetMarginals& targets, Axis axis);

/// argmin over {Q : Q_axis = target} of D(Q || R), D chosen by
/// `divergence`. Each divergence is solved through its own closed form; all
/// three coincide with balance_step.
JointMeasure project_marginal(const JointMeasure& r, const Vector& target,
                              Axis axis, Divergence divergence);

struct BalanceTrace {
  /// iterates[0] is the input, iterates[l] the result of step l.
  std::vector<JointMeasure> iterates;
  /// ratio_bounds[l - 1] = max over atoms of |target / marginal - 1| on the
  /// axis of step l, evaluated at iterates[l - 1].
  std::vector<double> ratio_bounds;
  /// Alternating marginal violations, see kl_violation_sequence.
  std::vector<double> kl_violations;
  Order order = Order::XFirst;
  TargetMarginals targets;

  int steps() const { return static_cast<int>(iterates.size()) - 1; }
  Axis axis_of_step(int step) const { return step_axis(order, step); }
  const JointMeasure& final_measure() const { return iterates.back(); }
};

/// k alternating balance steps. With `projection` set, every step goes
/// through project_marginal with that divergence instead of balance_step.
BalanceTrace balance_k(const JointMeasure& q, const TargetMarginals& targets,
                       int k, Order order = Order::XFirst,
                       std::optional<Divergence> projection = std::nullopt);

/// Last iterate of balance_k without keeping the intermediate measures.
JointMeasure balance_final(const JointMeasure& q,
                           const TargetMarginals& targets, int k,
                           Order order = Order::XFirst);

struct ConvergenceOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  Order order = Order::XFirst;
  std::optional<Divergence> projection;
};

struct ConvergenceResult {
  JointMeasure measure;
  int iterations = 0;
  double max_violation = 0.0;
};

/// Raised when max_iter steps leave a marginal more than tol away.
class NotConverged : public Error {
 public:
  NotConverged(JointMeasure last, int iterations, double max_violation);

  const JointMeasure& last_iterate() const noexcept { return last_; }
  int iterations() const noexcept { return iterations_; }
  double max_violation() const noexcept { return max_violation_; }

 private:
  JointMeasure last_;
  int iterations_;
  double max_violation_;
};

/// Sup-norm distance of both marginals of q to the targets.
double marginal_violation(const JointMeasure& q,
                          const TargetMarginals& targets);

/// Alternates steps until both marginals are within tol (sup norm). An input
/// already within tol is returned unchanged with 0 iterations.
ConvergenceResult balance_to_convergence(const JointMeasure& q,
                                         const TargetMarginals& targets,
                                         const ConvergenceOptions& options = {});

/// For X-first traces:
///   KL(Q0_X || P_X), KL(P_Y || Q1_Y), KL(Q2_X || P_X), KL(P_Y || Q3_Y), ...
/// with the roles of X and Y exchanged for Y-first traces. Entry 0 uses the
/// normalized input marginal.
std::vector<double> kl_violation_sequence(const BalanceTrace& trace);

/// True when every consecutive increase is at most `tol`.
bool is_nonincreasing(std::span<const double> values, double tol);

struct RatioBoundEntry {
  int step = 0;
  double observed = 0.0;
  /// max{n - 1, 1} at step 1, max{1/p_star^2 - 1, 1} afterwards.
  double gross_envelope = 0.0;
  /// n sqrt(KLref / 2) at step 1, sqrt(KLref / 2) / p_star^2 afterwards.
  double kl_envelope = 0.0;
  /// (2 / p_star) sqrt(KLref / 2); only set when KLref <= p_star^2 / 2.
  std::optional<double> small_kl_envelope;
  bool holds = true;
};

struct RatioBoundReport {
  /// KL0: the first entry of the violation sequence.
  double initial_kl = 0.0;
  /// KLref = max(KL0, KL1). The violation sequence is nonincreasing only
  /// from its second entry on (the first step can raise the other axis's
  /// violation above KL0), so the KL envelopes are anchored here.
  double reference_kl = 0.0;
  double p_star = 0.0;
  std::vector<RatioBoundEntry> entries;
  bool all_hold() const;
};

/// Observed marginal ratio deviations M_l along a trace started from an
/// empirical measure of n draws, each checked against its finite-sample
/// envelopes. `slack` absorbs roundoff in the comparisons.
RatioBoundReport marginal_ratio_bound(const BalanceTrace& trace,
                                      std::int64_t n, double slack = 1e-12);

}  // namespace dbal
