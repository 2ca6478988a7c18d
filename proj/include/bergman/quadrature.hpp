#pragma once

// Geometry of the unit ball B in R^n and the upper half-space R^{n+1}_+, and
// every quadrature rule used by the library.
//
// Measure conventions:
//   * sphere integrals use the normalized surface measure (total mass 1);
//   * ball integrals use the normalized volume dV = n r^{n-1} dr dsigma.
// Points close to the boundary carry their distance to it ("depth") next to
// the radius so that 1 - r never has to be recomputed by cancellation.

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bergman {

/// A point x = r x' of the unit ball.
struct BallPoint {
  double r = 0.0;
  std::vector<double> dir;

  static BallPoint polar(double r, std::vector<double> dir);
  /// Origin maps to r = 0 with dir = e_1.
  static BallPoint from_cartesian(std::span<const double> x);

  int dim() const { return static_cast<int>(dir.size()); }
  double depth() const { return 1.0 - r; }
  std::vector<double> cartesian() const;
};

/// A point w = (y, s) of the upper half-space, s > 0.
struct HalfPoint {
  std::vector<double> y;
  double s = 1.0;

  static HalfPoint make(std::vector<double> y, double s);
  int dim() const { return static_cast<int>(y.size()); }
};

/// Nodes and weights of a one-dimensional rule.
struct LineRule {
  std::vector<double> x;
  std::vector<double> w;

  std::size_t size() const { return x.size(); }
  double sum_weights() const;
};

/// Gauss-Legendre rule on [-1, 1] (weights sum to 2).
LineRule gauss_legendre(int count);

/// Gauss rule for the weight (1 - x^2)^a on [-1, 1], a > -1, with weights
/// normalized to sum to 1 (Golub-Welsch).
LineRule gauss_gegenbauer(int count, double a);

/// Gauss-Legendre with `count` points mapped to [a, b].
LineRule gauss_on(double a, double b, int count);

/// Appends the Gauss-Legendre rule `ref` (on [-1, 1]) mapped to [a, b].
void append_mapped(LineRule& rule, const LineRule& ref, double a, double b);

/// Composite Gauss-Legendre on [0, length] with panels whose length halves
/// toward 0: [L/2, L], [L/4, L/2], ..., and a final panel [0, L 2^{-(panels-1)}].
/// Nodes are offsets from 0, so callers can map them to 1 - r or to heights
/// without losing precision near the singular end.
LineRule geometric_offsets(double length, int panels, int points);

/// Breakpoints a, a + h, a + 2h, a + 4h, ... clipped to b; at most max_panels
/// panels (the last one absorbs the remainder).
std::vector<double> geometric_breaks(double a, double b, double h, int max_panels = 64);

// ---------------------------------------------------------------------------
// Sphere

/// Nodes on S^{n-1} with weights summing to 1.
struct SphereRule {
  int dim = 3;
  int degree = 0;               // exact for polynomials up to this degree
  std::vector<double> coords;   // node i occupies [i*dim, (i+1)*dim)
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t i) const {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

/// Product rule exact to `degree`: equispaced circle for n = 2, Gauss-Legendre
/// in x_1 times equispaced azimuth for n = 3, Gauss-Gegenbauer in x_1 times a
/// rule on S^{n-2} for n >= 4. The polar axis is e_1.
SphereRule make_sphere_rule(int n, int degree);

using SphereField = std::function<double(std::span<const double>)>;

/// Sum of w_i g(node_i). Throws EvaluationError on a non-finite value.
double integrate_sphere(const SphereField& g, const SphereRule& rule);

struct AdaptiveOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_depth = 20;
};

/// Adaptive composite Gauss on [a, b]: a panel is accepted when its rule and
/// the sum over its halves differ by at most rel_tol |value| + abs_tol.
double adaptive_gauss(const std::function<double(double)>& g, double a, double b, const LineRule& ref,
                      const AdaptiveOptions& opts = {});

/// Vector-valued variant: g writes its components into out; the integrals
/// are added to acc. The test uses the largest component difference.
void adaptive_gauss(const std::function<void(double, std::span<double>)>& g, double a, double b,
                    const LineRule& ref, std::span<double> acc, const AdaptiveOptions& opts = {});

// ---------------------------------------------------------------------------
// Radius

/// Composite Gauss-Legendre on (0, 1): [0, 1/2] followed by panels whose
/// length halves toward r = 1.
struct RadialRule {
  std::vector<double> nodes;    // increasing
  std::vector<double> depths;   // 1 - nodes, exact
  std::vector<double> weights;
  int boundary_refinement = 0;  // number of panels toward r = 1
  int degree = 0;               // per-panel polynomial exactness

  std::size_t size() const { return nodes.size(); }
};

RadialRule make_radial_rule(int boundary_refinement = 40, int points = 16);

/// Integral over [0, 1] of g(r, 1 - r) dr.
double integrate_radial(const std::function<double(double r, double depth)>& g,
                        const RadialRule& rule);

/// Normalized volume integral: n * sum_r w r^{n-1} * (sphere average of g).
double integrate_ball(const SphereField& g, const SphereRule& srule, const RadialRule& rrule);

struct ShellAverage {
  double r;
  double average;
};

/// Sphere averages of g on each shell |x| = r of an increasing grid in [0, 1).
std::vector<ShellAverage> radial_profile(const SphereField& g, const SphereRule& srule,
                                         std::span<const double> r_grid);

// ---------------------------------------------------------------------------
// Axially symmetric integration
//
// For a direction y' at angle theta from an axis, the normalized measure on
// S^{n-1} factors as c_n sin^{n-2}(theta) dtheta times the uniform measure on
// the S^{n-2} of directions orthogonal to the axis. The first coordinate xi
// of that S^{n-2} factor is all that inner products with an off-axis point
// depend on.

/// c_n = 1 / int_0^pi sin^{n-2}(theta) dtheta.
double polar_density_constant(int n);

/// Nodes theta in [0, pi] with weights c_n sin^{n-2}(theta) w_theta.
struct PolarRule {
  int dim = 3;
  std::vector<double> theta;
  std::vector<double> weights;

  std::size_t size() const { return theta.size(); }
};

/// Composite Gauss-Legendre on [0, pi] with panels [0, h], [h, 2h], [2h, 4h],
/// ... refined toward the axis. h >= pi gives a single panel.
PolarRule make_polar_rule(int n, double h, int points);

/// Polar rule on an arbitrary set of panels given by breakpoints.
PolarRule make_polar_rule(int n, std::span<const double> breaks, int points);

/// Distribution of xi = <e, eta> for eta uniform on S^{n-2}: two atoms for
/// n = 2, Gauss-Chebyshev for n = 3, Gauss-Gegenbauer for n >= 4.
struct AzimuthRule {
  int dim = 3;
  std::vector<double> xi;
  std::vector<double> one_minus_xi;   // 1 - xi without cancellation
  std::vector<double> weights;        // sum to 1

  std::size_t size() const { return xi.size(); }
};

AzimuthRule make_azimuth_rule(int n, int points);

/// 1 - <x', y'> for directions at polar angles theta_x, theta_y whose
/// orthogonal components have inner product xi; one_minus_xi = 1 - xi.
double direction_gap(double theta_x, double theta_y, double one_minus_xi);

// ---------------------------------------------------------------------------
// Upper half-space

/// Truncated product rule for R^{n+1}_+: every lateral coordinate on
/// [-R, R], the height on [s_min, s_max].
struct HalfSpaceRule {
  int n = 1;
  double lateral_extent = 1e6;
  double s_min = 1e-9;
  double s_max = 1e6;
  LineRule lateral;   // one axis, symmetric about 0
  LineRule radial;    // |y| in [0, R] for axially symmetric integrands
  LineRule height;
};

/// Lateral panels [-c, 0], [0, c] followed by doubling panels out to R; height
/// panels doubling from s_min to `core` and from `core` to s_max.
HalfSpaceRule make_halfspace_rule(int n, double lateral_extent, double s_min, double s_max,
                                  int points = 12, double core = 1.0);

struct HalfSpaceIntegral {
  double value = 0.0;
  double tail_bound = 0.0;
};

using HalfSpaceField = std::function<double(std::span<const double> y, double s)>;

/// Truncated integral of g over the rule box plus a bound on the omitted mass.
/// `decay_exponent` d declares |g(w)| <= A |w|^{-d} far from the origin; A is
/// estimated on the outer nodes, and the strip s < s_min is bounded by
/// 2 s_min times the slice integral at s_min. d <= n + 1 is refused.
HalfSpaceIntegral integrate_halfspace(const HalfSpaceField& g, const HalfSpaceRule& rule,
                                      double decay_exponent);

/// Same for integrands depending on (|y|, s) only.
HalfSpaceIntegral integrate_halfspace_radial(const std::function<double(double, double)>& g,
                                             const HalfSpaceRule& rule, double decay_exponent);

/// Surface area of S^{k-1} in R^k.
double sphere_area(int k);

}  // namespace bergman
