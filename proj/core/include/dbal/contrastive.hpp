#pragma once

#include <vector>

#include "dbal/balancing.hpp"
#include "dbal/measure.hpp"

namespace dbal {

/// Square similarity matrix of a batch: entry (i, j) scores image i against
/// text j, and the diagonal pairs are the positives.
class ScoreMatrix {
 public:
  explicit ScoreMatrix(Matrix scores);

  const Matrix& scores() const noexcept { return scores_; }
  Index size() const noexcept { return scores_.rows(); }

 private:
  Matrix scores_;
};

/// exp(S) normalized over all n^2 cells, with the max subtracted first.
JointMeasure initial_measure(const ScoreMatrix& scores);

/// Uniform 1/n on both axes.
TargetMarginals uniform_targets(Index n);

/// Symmetric cross-entropy over rows and columns.
double standard_clip_loss(const ScoreMatrix& scores);

/// -1/2 sum_i [log Q(i, i) + log R(i, i)], Q the k-step Y-first and R the
/// k-step X-first balancing of the initial measure toward uniform targets.
/// At k = 1 this is standard_clip_loss + n log n.
double balanced_clip_loss(const ScoreMatrix& scores, int k);

struct ClipTraceEntry {
  int iteration = 0;
  /// Sup-norm distance of each marginal to 1/n.
  double q_x_deviation = 0.0;
  double q_y_deviation = 0.0;
  double r_x_deviation = 0.0;
  double r_y_deviation = 0.0;
  double loss = 0.0;
};

/// Entries for iterations 0..k of both traces.
std::vector<ClipTraceEntry> clip_marginal_trace(const ScoreMatrix& scores,
                                                int k);

}  // namespace dbal
