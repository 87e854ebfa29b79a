#include "dbal/estimation.hpp"

#include <cmath>

namespace dbal {
namespace {

const TargetMarginals& require_targets(const EstimatorSpec& spec) {
  if (!spec.targets) {
    throw InvalidArgument(spec.name() + " estimator needs target marginals");
  }
  return *spec.targets;
}

double ipwi_estimate(const EmpiricalSample& sample, const TestFunction& h,
                     const TargetMarginals& targets) {
  const JointMeasure empirical = sample.to_measure();
  const Vector p_nx = marginal_x(empirical);
  const Vector p_ny = marginal_y(empirical);
  if ((p_nx.array() <= 0.0).any() || (p_ny.array() <= 0.0).any()) {
    return expectation(empirical, h);
  }
  const Vector wx = targets.p_x().cwiseQuotient(p_nx);
  const Vector wy = targets.p_y().cwiseQuotient(p_ny);
  const Matrix weighted = wx.asDiagonal() * empirical.weights() * wy.asDiagonal();
  return (weighted.array() * h.values().array()).sum();
}

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Balanced:
      return "balanced";
    case EstimatorKind::Empirical:
      return "empirical";
    case EstimatorKind::IPWI:
      return "ipwi";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(const std::string& text) {
  if (text == "balanced") return EstimatorKind::Balanced;
  if (text == "empirical") return EstimatorKind::Empirical;
  if (text == "ipwi") return EstimatorKind::IPWI;
  throw InvalidArgument("unknown estimator: " + text);
}

EstimatorSpec EstimatorSpec::empirical() { return {}; }

EstimatorSpec EstimatorSpec::balanced(int k, TargetMarginals targets,
                                      Order order) {
  if (k < 0) throw InvalidArgument("balanced estimator needs k >= 0");
  return {EstimatorKind::Balanced, k, std::move(targets), order};
}

EstimatorSpec EstimatorSpec::ipwi(TargetMarginals targets) {
  return {EstimatorKind::IPWI, 0, std::move(targets), Order::XFirst};
}

std::string EstimatorSpec::name() const {
  if (kind == EstimatorKind::Balanced) {
    return "balanced(" + std::to_string(k) + ")";
  }
  return to_string(kind);
}

double estimate(const EmpiricalSample& sample, const TestFunction& h,
                const EstimatorSpec& spec) {
  if (h.rows() != sample.counts.rows() || h.cols() != sample.counts.cols()) {
    throw InvalidArgument("test function shape does not match the sample");
  }
  const JointMeasure empirical = sample.to_measure();
  switch (spec.kind) {
    case EstimatorKind::Empirical:
      return expectation(empirical, h);
    case EstimatorKind::Balanced: {
      const TargetMarginals& targets = require_targets(spec);
      if (!support_event(sample, targets)) return expectation(empirical, h);
      return expectation(balance_final(empirical, targets, spec.k, spec.order),
                         h);
    }
    case EstimatorKind::IPWI:
      return ipwi_estimate(sample, h, require_targets(spec));
  }
  return expectation(empirical, h);
}

void summarize_errors(std::span<const double> errors, MseRecord& record) {
  const auto count = static_cast<double>(errors.size());
  record.seeds_used = static_cast<int>(errors.size());
  if (errors.empty()) return;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_sq += e * e;
  }
  record.bias = sum / count;
  record.mse = sum_sq / count;
  double centred = 0.0;
  double sq_dev = 0.0;
  for (double e : errors) {
    centred += (e - record.bias) * (e - record.bias);
    sq_dev += (e * e - record.mse) * (e * e - record.mse);
  }
  record.variance = centred / count;
  if (errors.size() > 1) {
    record.bias_stderr = std::sqrt(centred / (count - 1.0) / count);
    record.mse_stderr = std::sqrt(sq_dev / (count - 1.0) / count);
  }
}

std::vector<MseRecord> mse_monte_carlo(const JointMeasure& p,
                                       const TestFunction& h,
                                       const std::vector<EstimatorSpec>& specs,
                                       std::int64_t n,
                                       std::span<const std::uint64_t> seeds,
                                       int jobs) {
  if (!p.normalized()) throw InvalidArgument("measure must be normalized");
  const double truth = expectation(p, h);
  // errors[spec][seed]
  std::vector<std::vector<double>> errors(
      specs.size(), std::vector<double>(seeds.size(), 0.0));
  parallel_for(seeds.size(), jobs, [&](std::size_t i) {
    const EmpiricalSample sample = sample_empirical(p, n, seeds[i]);
    for (std::size_t e = 0; e < specs.size(); ++e) {
      errors[e][i] = estimate(sample, h, specs[e]) - truth;
    }
  });

  std::vector<MseRecord> records;
  records.reserve(specs.size());
  for (std::size_t e = 0; e < specs.size(); ++e) {
    MseRecord record{.estimator = specs[e],
                     .n = n,
                     .m = p.rows(),
                     .k = specs[e].k};
    summarize_errors(errors[e], record);
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace dbal
