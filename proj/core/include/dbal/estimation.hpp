#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbal/balancing.hpp"
#include "dbal/detail/parallel.hpp"
#include "dbal/measure.hpp"

namespace dbal {

enum class EstimatorKind { Balanced, Empirical, IPWI };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(const std::string& text);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::Empirical;
  int k = 0;
  /// Required for Balanced and IPWI; possibly misspecified.
  std::optional<TargetMarginals> targets;
  Order order = Order::XFirst;

  static EstimatorSpec empirical();
  static EstimatorSpec balanced(int k, TargetMarginals targets,
                                Order order = Order::XFirst);
  static EstimatorSpec ipwi(TargetMarginals targets);

  /// "empirical", "ipwi" or "balanced(k)".
  std::string name() const;
};

/// Estimate of E_P[h] from a sample.
///   Empirical: E_{P_n}[h].
///   Balanced(k): E under the k-step balanced P_n on the support event,
///                otherwise the empirical mean.
///   IPWI: sum of h P_n (P_X / P_{n,X}) (P_Y / P_{n,Y}); empirical mean
///         when an empirical marginal has an empty atom.
double estimate(const EmpiricalSample& sample, const TestFunction& h,
                const EstimatorSpec& spec);

struct MseRecord {
  EstimatorSpec estimator;
  std::int64_t n = 0;
  Index m = 0;
  int k = 0;
  double s = 0.0;
  double epsilon = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  /// Population variance over seeds, so mse = bias^2 + variance.
  double variance = 0.0;
  /// Standard error of the MSE and of the bias across seeds.
  double mse_stderr = 0.0;
  double bias_stderr = 0.0;
  int seeds_used = 0;
};

/// Fills the error statistics of `record` from per-seed errors
/// (estimate - truth).
void summarize_errors(std::span<const double> errors, MseRecord& record);

/// Monte Carlo MSE of each spec against E_P[h]. Every seed draws one sample
/// of size n that all specs share. Seeds run on `jobs` threads; results do
/// not depend on scheduling.
std::vector<MseRecord> mse_monte_carlo(const JointMeasure& p,
                                       const TestFunction& h,
                                       const std::vector<EstimatorSpec>& specs,
                                       std::int64_t n,
                                       std::span<const std::uint64_t> seeds,
                                       int jobs = 1);

}  // namespace dbal
