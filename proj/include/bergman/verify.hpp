#pragma once

// Numerical checks of the kernel estimates and integral representations:
// empirical constants of the inequalities, exact identities, scaling laws
// and reproduction errors.
//
// A report passes when its empirical constant is finite and survives one
// refinement of the quadrature with a relative change at most the declared
// threshold. Checks with an exact target (a scaling law, a reproduction
// error) fail when the target is missed; a constant that moves too much
// under refinement makes the report inconclusive instead.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bergman/kernels.hpp"
#include "bergman/spaces.hpp"

namespace bergman {

enum class Verdict { pass, fail, inconclusive };

const char* to_string(Verdict v);

/// One evaluation point of a check: where (boundary distance, radius, t,
/// series order, ...) and the value found there.
struct RatioSample {
  std::vector<double> at;
  double value = 0.0;
};

struct LemmaReport {
  std::string lemma_id;
  std::vector<std::pair<std::string, double>> parameter_point;
  std::vector<RatioSample> samples;
  double max_ratio = 0.0;              // empirical constant, or largest error
  double grid_refinement_drift = 0.0;  // relative change of max_ratio under refinement
  double drift_threshold = 0.1;
  /// Extra named results (fitted rate, scaling error, tail bound, ...).
  std::vector<std::pair<std::string, double>> measures;
  Verdict verdict = Verdict::inconclusive;
  bool pass = false;
  std::string notes;

  /// measures entry by name; throws std::out_of_range when absent.
  double measure(const std::string& name) const;
};

// ---------------------------------------------------------------------------
// Radial integral  I(rho) = int_0^1 (1 - r)^alpha (1 - r rho)^-lambda dr

/// max over rho of I(rho) (1 - rho)^{lambda - alpha - 1}. Requires
/// alpha > -1 and lambda > alpha + 1. Samples hold the ratio at each rho.
LemmaReport verify_rro(double alpha, double lambda, std::span<const double> rho_grid);

/// I(rho) by composite Gauss panels halving toward r = 1.
double radial_power_integral(double alpha, double lambda, double rho, int points = 16);

// ---------------------------------------------------------------------------
// Power integrals of the Bergman kernels

struct PowerIntegralGrid {
  int points = 10;          // Gauss points per panel
  int depth_levels = 48;    // dyadic panels toward the boundary
  double ratio = 1.5;       // geometric panel ratio (half-space)
  double extent = 1e10;     // half-space truncation, relative to t
  double s_min = 1e-10;     // half-space height cutoff, relative to t

  PowerIntegralGrid refined() const;
};

/// int_B |Q_beta(x, y)|^{gamma/(n+beta)} (1 - |y|)^delta dV(y) for x = r e_1.
double qbeta_power_integral(int n, double beta, double delta, double gamma, double r,
                            const PowerIntegralGrid& grid = {});

/// Ratio I(x) (1 - |x|)^{gamma - n - delta} along x = r e_1, r in r_grid.
/// Requires delta > -1, gamma > n + delta and beta > 0. The measure
/// "approach_drift" is the half-width of the ratio band relative to its
/// centre, (max - min) / (max + min); the check fails above 0.2.
LemmaReport verify_qbeta(int n, double delta, double gamma, double beta, std::span<const double> r_grid,
                         const PowerIntegralGrid& grid = {});

struct HalfSpacePowerIntegral {
  double value = 0.0;
  double tail_bound = 0.0;   // strip s < s_min plus the far field
};

/// int |Q_m((0, t), (y, s))|^{gamma/(n+m+1)} s^delta dy ds. The panels are
/// geometric with ratio grid.ratio in absolute coordinates, so a dilation
/// of t is not a symmetry of the rule.
HalfSpacePowerIntegral qm_power_integral(int n, int m, double delta, double gamma, double t,
                                         const PowerIntegralGrid& grid = {});

/// Ratio I(t) t^{gamma - n - 1 - delta} over t_grid plus the exact scaling
/// I(2t)/I(t) = 2^{delta - gamma + n + 1} at every t of the grid (measure
/// "scaling_error", relative; the check fails above 1e-4). Requires
/// delta > -1 and gamma > n + 1 + delta.
LemmaReport verify_qm(int n, double delta, double gamma, int m, std::span<const double> t_grid,
                      const PowerIntegralGrid& grid = {});

// ---------------------------------------------------------------------------
// Kernel estimates

enum class KernelBound {
  pointwise,      // ball: |Q_beta(x, y)| |rho x - y'|^{n+beta}, beta > 0
  sphere_mean,    // ball: int_S |Q_beta(r x', y)| dx' (1 - r rho)^{1+beta}, beta > -1
  sphere_power,   // ball: int_S |r x' - y'|^-beta dx' (1 - r)^{beta-n+1}, beta > n - 1
  halfspace,      // half-space: |Q_m(z, w)| [|x - y|^2 + (s + t)^2]^{(n+m+1)/2}
};

const char* to_string(KernelBound b);

/// Empirical sup of |kernel| / bound over sample_count deterministic
/// low-discrepancy samples, compared with the sup over 4 sample_count
/// samples. The half-space report also carries "aligned_value", the ratio
/// at x = y, s + t = 1.
LemmaReport verify_kernel_bounds(const KernelSpec& spec, KernelBound part, int sample_count = 4096);

// ---------------------------------------------------------------------------
// Poisson series

/// Partial sums S_K = sum_{k <= K} r^k Z_k(t) against the closed form of the
/// Poisson kernel at |x| = r, <x', y'> = t, for K = block, 2 block, ...,
/// k_max. Samples hold (K, |S_K - P|); the measure "rate" is the geometric
/// rate (e_{K+block} / e_K)^{1/block} of the last block, "limit" the closed
/// form. Passes when the rate is within 0.05 of r and the last error is
/// below 1e-6 of the limit.
LemmaReport verify_poisson_series(int n, double r, double t = 1.0, int k_max = 32, int block = 8);

// ---------------------------------------------------------------------------
// Integral representations

/// The space f is asserted to belong to: A^p_alpha (ball, alpha is the
/// kernel order beta) or the half-space Bergman space with weight s^alpha,
/// or, when weight is set, h^p_v / H^p_v. p = inf is accepted for weighted
/// spaces only and marks the run provisional.
struct Hypothesis {
  double p = 2.0;
  double alpha = 0.0;
  std::optional<SWeight> weight;

  static Hypothesis bergman(double p, double alpha);
  static Hypothesis weighted(double p, SWeight v);
};

struct RepresentationGrid {
  int radial_refinement = 6;    // ball: panels halving toward rho = 1
  int radial_points = 12;
  int theta_panels = 8;
  int theta_points = 12;
  int azimuth_points = 48;      // circle nodes (n = 3) or sphere degree (n >= 4)
  int peak_levels = 24;         // ball, peaked f or fractional beta: radial panels
  int lateral_points = 12;      // half-space
  double extent = 1048576.0;    // half-space truncation
  double s_min = 1e-9;

  RepresentationGrid refined() const;
};

/// Reproduced value int Q_beta(x, y) f(y) (1 - |y|^2)^beta |y|^{n-1} d|y| dy'.
/// Functions with an axis are integrated in polar coordinates about it
/// against the kernel averaged over rotations fixing the axis (a zonal
/// series), which also resolves boundary peaks. Other functions use a
/// product rule about x', exact for polynomials but only as fine as its
/// uniform angular panels elsewhere.
double represent_ball(const HarmonicFn& f, double beta, std::span<const double> x,
                      const RepresentationGrid& grid = {});

/// Reproduced value int Q_m(z, w) f(w) s^m dy ds with its tail bound.
HalfSpaceIntegral represent_halfspace(const HarmonicFn& f, int m, std::span<const double> z,
                                      const RepresentationGrid& grid = {});

/// Interior grids: the origin and r in {0.35, 0.7} along +-e_i and a
/// diagonal (ball); x in {-2, -1, 0, 1, 2} times t in {1/4, 1/2, 1, 2, 4}
/// along the first lateral axis (half-space).
std::vector<std::vector<double>> default_representation_grid(Domain domain, int n);

/// max over x_grid of |reproduced - f(x)| / (1 + |f(x)|), refined once.
/// Membership of f in the hypothesis space is checked with the norm of that
/// space, and the kernel order with the hypothesis of the representation;
/// either failure throws PreconditionError naming the inequality. Passes at
/// 1e-4 (ball) or 1e-3 plus the relative tail bound (half-space).
LemmaReport verify_representation(const HarmonicFn& f, const KernelSpec& spec, const Hypothesis& hypothesis,
                                  std::span<const std::vector<double>> x_grid = {},
                                  const RepresentationGrid& grid = {});

}  // namespace bergman
