#pragma once

#include <vector>

#include "dbal/balancing.hpp"
#include "dbal/measure.hpp"

namespace dbal {

/// Singular system of the conditional-mean operators of a measure P:
///   mu_Y alpha_j = s_j beta_j,  mu_X beta_j = s_j alpha_j,
/// with alpha_j orthonormal in L2(P_X) and beta_j orthonormal in L2(P_Y).
/// Column 0 is the constant pair with s = 1. alpha and beta are complete
/// bases; the columns past r = min(m, l) on the longer axis are unpaired and
/// act as singular functions with s = 0.
struct SpectralDecomposition {
  Vector singular_values;  // r = min(m, l), nonincreasing
  Matrix alpha;            // m x m
  Matrix beta;             // l x l
  Vector p_x;
  Vector p_y;

  Index rank() const noexcept { return singular_values.size(); }
  /// s_2, or 0 when r = 1.
  double second_singular_value() const noexcept {
    return rank() > 1 ? singular_values(1) : 0.0;
  }
};

/// Coordinates of mu_X hbar on alpha (u, length m) and of mu_Y hbar on beta
/// (v, length l), hbar = h - E_P[h].
struct FunctionCoordinates {
  Vector u;
  Vector v;
};

struct VariancePrediction {
  double sigma0_sq = 0.0;
  /// sigma_k_sq[k - 1] for k = 1..K.
  std::vector<double> sigma_k_sq;
  double sigma_gap_sq = 0.0;
  double sigma_limit_sq = 0.0;
};

/// [mu_X h](x) = E_P[h | X = x]. Throws ZeroMarginal on a zero-mass row.
Vector conditional_mean_x(const JointMeasure& p, const TestFunction& h);
Vector conditional_mean_y(const JointMeasure& p, const TestFunction& h);

/// h(x, y) - [mu_X h](x).
TestFunction center_x(const JointMeasure& p, const TestFunction& h);
TestFunction center_y(const JointMeasure& p, const TestFunction& h);
TestFunction center(const JointMeasure& p, const TestFunction& h, Axis axis);

/// Functions of one coordinate viewed as m x l tables.
TestFunction lift_x(const Vector& f, Index cols);
TestFunction lift_y(const Vector& g, Index rows);

double variance(const JointMeasure& p, const TestFunction& h);

/// Normalized-matrix SVD: A = D_X^{-1/2} P D_Y^{-1/2}. The constant pair is
/// split off first, the rest comes from an SVD of A restricted to the
/// orthogonal complements of sqrt(P_X) and sqrt(P_Y). Each alpha_j is signed
/// so that its entry of largest magnitude is positive.
SpectralDecomposition decompose(const JointMeasure& p);

FunctionCoordinates coordinates(const JointMeasure& p, const TestFunction& h,
                                const SpectralDecomposition& decomposition);

/// Var_P(C_1 ... C_k h) by literal operator application, where C_l centres
/// on the axis balanced at step l under `order` (C_k is applied first).
double sigma_k_direct(const JointMeasure& p, const TestFunction& h, int k,
                      Order order = Order::XFirst);

/// sigma_0^2 - sigma_k^2 from the spectrum. With c the coordinates on the
/// axis of step k (the first centring applied) and d those on the other:
///   sum_{j >= 2} c_j^2 + (d_j - s_j c_j)^2 (1 - s_j^{2(k-1)}) / (1 - s_j^2)
/// The last factor is evaluated as the finite geometric sum, so s_j = 1 is
/// handled by its limit k - 1.
double predicted_reduction(const SpectralDecomposition& decomposition,
                           const FunctionCoordinates& coords, int k,
                           Order order = Order::XFirst);

/// Limit of predicted_reduction as k grows:
///   sum_{j >= 2} u_j^2 + (v_j - s_j u_j)^2 / (1 - s_j^2).
/// Throws SpectralGapViolation when some s_j (j >= 2) equals one.
double sigma_gap(const SpectralDecomposition& decomposition,
                 const FunctionCoordinates& coords);

/// Remainder sigma_k^2 - (sigma_0^2 - sigma_gap^2) for even k from the
/// explicit geometric term:
///   sum_{j >= 2} s_j^2 (d_j - s_j c_j)^2 / (1 - s_j^2) * s_j^{2(k-2)}.
double even_step_remainder(const SpectralDecomposition& decomposition,
                           const FunctionCoordinates& coords, int k,
                           Order order = Order::XFirst);

VariancePrediction predict_variances(const JointMeasure& p,
                                     const TestFunction& h, int max_k,
                                     Order order = Order::XFirst);

/// Largest singular value treated as strictly below one.
inline constexpr double kSpectralGapTolerance = 1e-10;

}  // namespace dbal
