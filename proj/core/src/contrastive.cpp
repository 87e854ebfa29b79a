#include "dbal/contrastive.hpp"

#include <cmath>

namespace dbal {
namespace {

double log_sum_exp(const Vector& v) {
  const double top = v.maxCoeff();
  return top + std::log((v.array() - top).exp().sum());
}

double deviation(const Vector& marginal, Index n) {
  return (marginal.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff();
}

double diagonal_loss(const JointMeasure& q, const JointMeasure& r) {
  double total = 0.0;
  for (Index i = 0; i < q.rows(); ++i) {
    total += std::log(q(i, i)) + std::log(r(i, i));
  }
  return -0.5 * total;
}

}  // namespace

ScoreMatrix::ScoreMatrix(Matrix scores) : scores_(std::move(scores)) {
  if (scores_.rows() != scores_.cols()) {
    throw InvalidArgument("score matrix must be square");
  }
  if (scores_.rows() < 2) throw InvalidArgument("score matrix needs n >= 2");
  if (!scores_.allFinite()) {
    throw InvalidArgument("score matrix has non-finite entries");
  }
}

JointMeasure initial_measure(const ScoreMatrix& scores) {
  const Matrix& s = scores.scores();
  Matrix w = (s.array() - s.maxCoeff()).exp().matrix();
  w /= w.sum();
  return JointMeasure(std::move(w));
}

TargetMarginals uniform_targets(Index n) {
  if (n < 1) throw InvalidArgument("uniform targets need n >= 1");
  const Vector u = Vector::Constant(n, 1.0 / static_cast<double>(n));
  return TargetMarginals(u, u);
}

double standard_clip_loss(const ScoreMatrix& scores) {
  const Matrix& s = scores.scores();
  double total = 0.0;
  for (Index i = 0; i < scores.size(); ++i) {
    const double row = s(i, i) - log_sum_exp(s.row(i).transpose());
    const double col = s(i, i) - log_sum_exp(s.col(i));
    total += row + col;
  }
  return -0.5 * total;
}

double balanced_clip_loss(const ScoreMatrix& scores, int k) {
  if (k < 0) throw InvalidArgument("k must be nonnegative");
  const JointMeasure p0 = initial_measure(scores);
  const TargetMarginals targets = uniform_targets(scores.size());
  return diagonal_loss(balance_final(p0, targets, k, Order::YFirst),
                       balance_final(p0, targets, k, Order::XFirst));
}

std::vector<ClipTraceEntry> clip_marginal_trace(const ScoreMatrix& scores,
                                                int k) {
  if (k < 0) throw InvalidArgument("k must be nonnegative");
  const Index n = scores.size();
  const JointMeasure p0 = initial_measure(scores);
  const TargetMarginals targets = uniform_targets(n);
  const BalanceTrace q = balance_k(p0, targets, k, Order::YFirst);
  const BalanceTrace r = balance_k(p0, targets, k, Order::XFirst);
  std::vector<ClipTraceEntry> entries;
  entries.reserve(static_cast<std::size_t>(k) + 1);
  for (int l = 0; l <= k; ++l) {
    const JointMeasure& ql = q.iterates[static_cast<std::size_t>(l)];
    const JointMeasure& rl = r.iterates[static_cast<std::size_t>(l)];
    entries.push_back({l, deviation(marginal_x(ql), n),
                       deviation(marginal_y(ql), n),
                       deviation(marginal_x(rl), n),
                       deviation(marginal_y(rl), n), diagonal_loss(ql, rl)});
  }
  return entries;
}

}  // namespace dbal
