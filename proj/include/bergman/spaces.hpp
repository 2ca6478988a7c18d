#pragma once

// Harmonic test functions and the norm scales built on them: integral means
// M_p, weighted Bergman norms A^p_alpha, weighted sup norms A^inf_t, mixed
// norms B^{p,q}_alpha and F^{p,q}_alpha, and norms with S-class weights.
//
// Ball conventions: dV = n r^{n-1} dr dsigma (mass 1). Bergman norms use the
// weight (1 - |x|^2)^alpha; sup norms use (1 - |x|)^t unless asked otherwise.
// Half-space norms use t^alpha with Lebesgue measure dx dt.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bergman/divergence.hpp"
#include "bergman/kernels.hpp"
#include "bergman/quadrature.hpp"

namespace bergman {

/// Which boundary-distance weight a ball quantity uses.
enum class WeightConvention { one_minus_r, one_minus_r_squared };

const char* to_string(WeightConvention c);

/// (1 - r)^t or (1 - r^2)^t from r and its depth 1 - r.
double boundary_weight(WeightConvention c, double r, double depth, double t);

/// An evaluable harmonic function with metadata used by the integrators.
///
/// Ball functions are evaluated at cartesian x in R^n; half-space functions
/// at (y_1, ..., y_n, s). Functions that are symmetric about the axis
/// e_{axis+1} (ball) or radial in y (half-space) also carry the reduced form,
/// which the integrators require and which is evaluated with the depth
/// 1 - r passed separately to keep precision at the boundary.
struct HarmonicFn {
  Domain domain = Domain::ball;
  int n = 3;
  std::string label;
  std::function<double(std::span<const double>)> eval;
  std::function<double(double r, double depth, double theta)> zonal;   // ball
  std::function<double(double rho, double s)> radial;                  // half-space
  int axis = 0;
  /// Ball: the smallest t with finite A^inf_t norm. Half-space: the largest.
  std::optional<double> growth_exponent;
  /// Ball: singular at the pole e_{axis+1}, varying on the scale 1 - |x|.
  bool boundary_peak = false;
  bool bounded = false;

  double operator()(std::span<const double> x) const { return eval(x); }
  bool symmetric() const { return domain == Domain::ball ? static_cast<bool>(zonal) : static_cast<bool>(radial); }
  /// Ball value at radius r, depth 1 - r, angle theta from the axis.
  double at(double r, double depth, double theta) const;
  /// Half-space value at |y| = rho (first coordinate for n = 1) and height s.
  double at_radial(double rho, double s) const;
  /// Cartesian point of the ball at (r, theta) in the plane of e_axis and the next basis vector.
  std::vector<double> ball_point(double r, double theta) const;
  HarmonicFn scaled(double a) const;
};

/// The reference functions: for the ball one, x1, x2, solid_k1..solid_k4
/// (r^k Z_k(<x', e_1>)), poisson_e1 (P(., e_1)), qbeta_0.9e1 (Q_1(., 0.9 e_1));
/// for the half-space poisson_hs (P(y, s + 1)) and qm_w0 (Q_0(., (0, 1))).
std::vector<HarmonicFn> gallery(int n_ball = 3, int n_half = 1);

/// Gallery entry by label; throws PreconditionError listing the labels.
HarmonicFn gallery_function(const std::string& label, int n_ball = 3, int n_half = 1);

/// max |Delta_h f| dist^2 / M over the given points, Delta_h the 2n+1 point
/// Laplacian of step h, dist the distance to the boundary and M the largest
/// |f| on the stencil and at x +- (dist/2) e_i.
double harmonicity_defect(const HarmonicFn& f, std::span<const std::vector<double>> points, double h = 1e-3);

// ---------------------------------------------------------------------------
// Weights

/// A positive weight v with dilation bounds m_v <= v(lambda r)/v(r) <= M_v for
/// lambda in [q_v, 1), measured on a dyadic grid. alpha_v = log m_v / log q_v.
struct SWeight {
  std::string name;
  std::function<double(double)> v;
  double q_v = 0.5;
  double m_v = 0.0;
  double M_v = 0.0;
  double alpha_v = 0.0;
  double domain_max = 1.0;   // 1 on the ball, +inf on the half-space

  /// v(u) = u^a.
  static SWeight power(double a, double q_v = 0.5, double domain_max = 1.0);
  /// v(u) = u^a (ln(c/u))^b, c >= e.
  static SWeight log_power(double a, double b, double c = 2.718281828459045, double q_v = 0.5);
  /// Measures m_v, M_v, alpha_v; throws PreconditionError when v is not
  /// positive and finite or m_v is not in (0, 1].
  static SWeight measured(std::string name, std::function<double(double)> v, double q_v = 0.5,
                          double domain_max = 1.0);

  double operator()(double u) const { return v(u); }
};

/// Theorem-9 style threshold s(v, p) = (alpha_v + 1)/p (0 at p = inf).
double weight_threshold(const SWeight& w, double p);

// ---------------------------------------------------------------------------
// Norms

enum class Scale { Mp, Ap, Ainf, Bpq, Fpq, hpv, Hpv };

const char* to_string(Scale s);

struct NormSpec {
  Scale scale = Scale::Ap;
  double p = 2.0;
  std::optional<double> q;
  double alpha = 0.0;
  std::optional<SWeight> weight;
  std::optional<double> radius;   // M_p only

  /// Checks the parameter ranges of the scale; throws PreconditionError.
  void validate() const;
};

struct NormGrid {
  int shells = 40;        // dyadic boundary shells (ball) or dyadic levels each way (half-space)
  int points = 12;        // Gauss points per panel
  int theta_panels = 8;   // uniform angular panels
  double rel_tol = 1e-12; // adaptive panel tolerance
  WeightConvention convention = WeightConvention::one_minus_r_squared;
};

struct NormResult {
  double value = 0.0;      // the norm (root taken)
  double integral = 0.0;   // the integral before the root
  bool divergent = false;
  DivergenceProfile profile;
  std::string note;
};

/// Integral mean over the sphere |x| = r; p = inf gives the max over nodes.
double mp_norm(const HarmonicFn& f, double p, double r, const SphereRule& rule);

/// ||f||_{A^p_alpha}; half-space functions use t^alpha.
NormResult bergman_norm(const HarmonicFn& f, double p, double alpha, const NormGrid& grid = {});

/// Mixed norms, see README for the order of integration.
NormResult mixed_norm(const HarmonicFn& f, Scale scale, double p, double q, double alpha,
                      const NormGrid& grid = {});

/// int |f|^p v(1 - |x|) dV (ball) or int |f|^p v(s) dy ds (half-space).
NormResult weighted_norm(const HarmonicFn& f, double p, const SWeight& w, const NormGrid& grid = {});

/// Dispatch on spec.scale (Ainf is reported through NormResult::value).
NormResult evaluate_norm(const HarmonicFn& f, const NormSpec& spec, const NormGrid& grid = {});

struct SupGrid {
  int levels = 40;        // dyadic boundary levels (ball) / each way (half-space)
  int per_level = 4;      // depth nodes per level
  int theta_uniform = 64;
  int refinements = 3;
  WeightConvention convention = WeightConvention::one_minus_r;

  SupGrid refined() const;
};

struct SupResult {
  double value = 0.0;
  std::vector<double> witness;   // cartesian point of the best node
  bool unbounded = false;
  DivergenceProfile profile;     // running sup over growing regions
  std::string note;
};

/// sup |f| w over the grid, w = (1 - |x|)^t (or (1 - |x|^2)^t) on the ball
/// and s^t on the half-space, with local refinement around the best node.
SupResult ainf_norm(const HarmonicFn& f, double t, const SupGrid& grid = {});

struct EmbeddingResult {
  bool applicable = true;
  double ratio = 0.0;           // sup |f| w / ||f||_{A^p_alpha}
  double refined_ratio = 0.0;   // same on a refined grid
  double drift = 0.0;           // relative change under refinement
  std::vector<double> witness;
  bool interior_witness = false;
  std::string note;
};

/// Pointwise bound |f(x)| <= C (1 - |x|)^{-(alpha+n)/p} ||f||_{A^p_alpha}
/// (half-space: t^{-(alpha+n+1)/p}); reports the empirical C.
EmbeddingResult embedding_check(const HarmonicFn& f, double p, double alpha, const NormGrid& norm_grid = {},
                                const SupGrid& sup_grid = {});

}  // namespace bergman
