#pragma once

// Poisson and Bergman kernels of the unit ball and of the upper half-space.
//
// Ball kernels follow the normalized surface measure: the Poisson kernel is
// (1 - |x|^2) / |x - y'|^n and
//   Q_beta(x, y) = 2 sum_k c_k (r rho)^k Z_k(<x', y'>),
//   c_k = Gamma(beta + 1 + k + n/2) / (Gamma(beta + 1) Gamma(k + n/2)).
// Close to the boundary all arguments travel as u = r rho together with
// 1 - u and 1 - <x', y'>, computed by the caller without cancellation.

#include <span>
#include <vector>

#include "bergman/quadrature.hpp"

namespace bergman {

enum class Domain { ball, halfspace };

const char* to_string(Domain d);

/// Kernel family selector: beta for the ball, m for the half-space. n is the
/// ambient dimension for the ball and the boundary dimension for the
/// half-space.
struct KernelSpec {
  Domain domain = Domain::ball;
  int n = 3;
  double beta = 0.0;
  int m = 0;

  static KernelSpec ball(int n, double beta);
  static KernelSpec halfspace(int n, int m);
};

/// Zonal harmonics Z_k(t) of S^{n-1} as functions of t = <x', y'>.
class ZonalTable {
 public:
  ZonalTable(int n, int k_max);

  int n() const { return n_; }
  int k_max() const { return k_max_; }
  /// d_k = Z_k(1), the dimension of the degree-k harmonic space.
  double dimension(int k) const;
  /// Z_0(t), ..., Z_{out.size()-1}(t) by the three-term recurrence.
  void evaluate(double t, std::span<double> out) const;

 private:
  int n_;
  int k_max_;
  std::vector<double> dims_;
};

/// Z_k(t). Throws DomainError for |t| > 1 and PreconditionError for k > k_max.
double zonal(int k, double t, const ZonalTable& table);

struct SeriesTruncation {
  int k_max = 512;
  /// Permit r rho > 0.999, where the default term budget is not enough.
  bool allow_near_boundary = false;
};

struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;   // bound on |omitted terms|
  int terms = 0;
};

/// Partial sum of the defining series of Q_beta with a certified tail bound.
SeriesValue q_beta_series(const BallPoint& x, const BallPoint& y, const KernelSpec& spec,
                          const SeriesTruncation& trunc = {});

/// Series evaluation from (u, t); shared by q_beta_series and BallKernel.
SeriesValue q_beta_series_at(int n, double beta, double u, double t,
                             const SeriesTruncation& trunc = {});

/// Fast evaluator for Q_beta. For integer beta it applies
/// (2 / beta!) prod_{j=0}^{beta} (u d/du + n/2 + j) to the Poisson kernel
/// through truncated Taylor arithmetic, which is exact up to rounding and
/// stable next to the diagonal. Other beta fall back to the series.
class BallKernel {
 public:
  BallKernel(int n, double beta);

  int n() const { return n_; }
  double beta() const { return beta_; }
  bool closed_form() const { return order_ >= 0; }

  /// Q_beta for u = r rho, one_minus_u = 1 - u, one_minus_t = 1 - <x', y'>.
  double operator()(double u, double one_minus_u, double one_minus_t) const;
  double operator()(const BallPoint& x, const BallPoint& y) const;

 private:
  int n_;
  double beta_;
  int order_ = -1;          // integer beta, or -1
  double prefactor_ = 0.0;  // 2 / beta!
};

/// 1 - <x', y'> for two unit vectors, accurate when they are close.
double direction_gap(std::span<const double> a, std::span<const double> b);

/// Ball Poisson kernel (1 - |x|^2) / |x - y'|^n.
double poisson_ball(const BallPoint& x, std::span<const double> yp);

/// Same from radius, depth 1 - r and 1 - <x', y'>.
double poisson_ball_zonal(int n, double r, double depth, double one_minus_t);

/// |rho x - y'|^{-(n + beta)} for y = rho y'; +inf when rho x = y'.
/// beta > 0 is required (the estimate is stated for beta > 0 only).
double q_beta_bound(const BallPoint& x, const BallPoint& y, const KernelSpec& spec);

/// Half-space Poisson kernel c_n t (|x|^2 + t^2)^{-(n+1)/2}, normalized to
/// integrate to 1 over R^n.
double poisson_halfspace(std::span<const double> x, double t);
double poisson_halfspace_constant(int n);

/// Q_m(z, w) = ((-2)^{m+1} / m!) d^{m+1}/dt^{m+1} P(x - y, t + s), evaluated
/// through the exact polynomial recurrence for t-derivatives of P.
class HalfSpaceKernel {
 public:
  HalfSpaceKernel(int n, int m);

  int n() const { return n_; }
  int m() const { return m_; }

  /// Q_m as a function of X = |x - y|^2 and T = t + s.
  double operator()(double X, double T) const;
  double operator()(const HalfPoint& z, const HalfPoint& w) const;

  /// d^j/dt^j P(x, t) for j <= m + 1, from X = |x|^2 and t.
  double poisson_derivative(int j, double X, double t) const;

 private:
  int n_;
  int m_;
  double cn_;
  // p_j(X, t) = sum_{a, b} coef[j][a][b] X^a t^b, homogeneous of degree j + 1
  // in (|x|, t); only the monomials with 2a + b = j + 1 appear.
  std::vector<std::vector<double>> coef_;   // coef_[j][a], b = j + 1 - 2a
};

double q_m(const HalfPoint& z, const HalfPoint& w, const KernelSpec& spec);

/// [|x - y|^2 + (s + t)^2]^{-(n + m + 1)/2}.
double q_m_bound(const HalfPoint& z, const HalfPoint& w, const KernelSpec& spec);

}  // namespace bergman
