#pragma once

// Level sets of the weighted modulus, the s2 finiteness functional, the
// splitting f = f1 + f2 of the reproducing formula along a level set, and the
// distance experiments built from them.
//
// Ball: U = {|f(x)| (1 - |x|)^lambda >= eps}, inner integral
//   I(x) = int_U |Q_beta(x, y)| (1 - |y|)^{beta - lambda} dV(y),
// outer integral int_B I^p (1 - |x|)^alpha dV. Half-space: V = {|f| s^lambda
// >= eps}, I(z) = int_V |Q_m(z, w)| s^{m - lambda} dy ds, outer weight t^alpha.
//
// All integrals use the symmetry of f: ball functions must carry a zonal
// form, half-space functions a form radial in y.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bergman/divergence.hpp"
#include "bergman/kernels.hpp"
#include "bergman/spaces.hpp"

namespace bergman {

struct LevelSetSpec {
  double eps = 1.0;
  double lambda = 1.0;

  /// Throws PreconditionError unless eps > 0 and lambda > 0.
  void validate() const;
};

/// The defining inequality at a cartesian point (x of the ball, or (y, s)).
bool in_level_set(const HarmonicFn& f, const LevelSetSpec& spec, std::span<const double> point);

struct DistanceGrid {
  int outer_levels = 10;          // outer truncations at 2^-1, ..., 2^-K
  int outer_points = 3;           // Gauss points per outer panel
  int inner_points = 5;           // Gauss points per inner panel
  int azimuth_points = 8;         // Gauss points per azimuth panel
  int inner_extra_levels = 14;    // inner depth panels below the outer point's depth
  int halfspace_inner_levels = 20;  // inner dyadic height panels each way
};

/// Ball point by radius, depth 1 - r and angle to the axis of f.
struct AxialPoint {
  double r = 0.0;
  double depth = 1.0;
  double theta = 0.0;

  static AxialPoint from_cartesian(std::span<const double> x, int axis);
};

/// Half-space point by |x| and height.
struct RadialPoint {
  double rho = 0.0;
  double t = 1.0;

  static RadialPoint from_cartesian(std::span<const double> z);
};

enum class Region { level_set, complement };

/// A level set tabulated on the inner grid together with the integrals of
/// the distance problem over it. Copies share the tables.
class LevelSetIntegrator {
 public:
  /// Throws PreconditionError when f lacks the needed symmetry or the kernel
  /// does not match the domain of f.
  LevelSetIntegrator(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                     const DistanceGrid& grid = {});

  const HarmonicFn& function() const;
  const LevelSetSpec& spec() const;
  const KernelSpec& kernel() const;
  const DistanceGrid& grid() const;
  /// True when no inner node lies in the level set.
  bool empty() const;

  /// The s2 inner integral with |kernel|.
  double s2_inner(const AxialPoint& x) const;
  double s2_inner(const RadialPoint& z) const;
  double s2_inner(std::span<const double> point) const;

  /// The reproducing integral of f restricted to the region:
  /// ball: int Q_beta(x, y) f(y) (1 - |y|^2)^beta rho^{n-1} d rho d sigma(y'),
  /// half-space: int Q_m(z, w) f(w) s^m dy ds.
  double reproduce(const AxialPoint& x, Region region) const;
  double reproduce(const RadialPoint& z, Region region) const;
  double reproduce(std::span<const double> point, Region region) const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

double s2_inner(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                std::span<const double> point, const DistanceGrid& grid = {});

/// Outer integral truncated at each level and classified. A failing
/// quadrature stops the profile and leaves a note.
DivergenceProfile s2_profile(const LevelSetIntegrator& integrator, double p, double alpha);
DivergenceProfile s2_profile(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel, double p,
                             double alpha, const DistanceGrid& grid = {});

struct Decomposition {
  HarmonicFn f1;   // reproducing integral over the complement of the level set
  HarmonicFn f2;   // reproducing integral over the level set
  LevelSetIntegrator integrator;
};

/// Splits the reproducing formula along the level set. Refuses kernels below
/// the representation range: beta > max(lambda - 1, 0) (ball) or
/// m > max(lambda - 1, 0) (half-space).
Decomposition decompose(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                        const DistanceGrid& grid = {});

struct WeightedSup {
  double value = 0.0;
  std::vector<double> witness;
};

/// sup |f1| (1 - |x|)^lambda (ball) or |f1| t^lambda (half-space) over the
/// boundary-approach grid down to depth 2^-outer_levels.
WeightedSup f1_weighted_sup(const Decomposition& d);

/// max |f1 + f2 - f| on an interior grid (ball r <= 0.7; half-space |x| <= 1,
/// t in [1/2, 2]).
double reproduction_error(const Decomposition& d);

/// Upper bound for s1 at this eps: the weighted sup of f1. Refuses with
/// PreconditionError unless the s2 profile is FINITE (otherwise f2 is not
/// known to lie in the target space).
double s1_upper(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel, double p, double alpha,
                const DistanceGrid& grid = {});

// ---------------------------------------------------------------------------
// Experiments

struct EpsilonRow {
  double eps = 0.0;
  bool empty_level_set = false;
  DivergenceProfile profile;
  double f1_sup = 0.0;                  // weighted sup of f1
  std::vector<double> f1_witness;
  std::optional<double> s1_upper;       // f1_sup when f2 is known to be in the target space
  std::optional<double> target_norm;    // mixed-norm check of f2 (half-space mixed targets)
  double reproduction_error = 0.0;
  std::string note;
};

struct KernelRun {
  double kernel_param = 0.0;            // beta or m
  std::vector<EpsilonRow> rows;         // sorted by eps
  double bracket_lo = 0.0;              // largest DIVERGENT eps (0 if none)
  double bracket_hi = 0.0;              // smallest FINITE eps
  bool coherent = true;                 // FINITE at eps implies FINITE above
  bool monotone = true;                 // truncated integrals nonincreasing in eps
  double ratio_lo = 0.0;                // band of f1_sup / eps, see ExperimentOptions
  double ratio_hi = 0.0;
  std::string note;
};

struct ExperimentOptions {
  std::vector<double> eps_factors = {0.05, 0.125, 0.25, 0.5, 0.75, 1.5};   // times the weighted sup
  std::vector<double> extra_eps;        // absolute eps values added to the grid
  double bisect_width = 0.05;           // times the weighted sup
  double band_lo = 0.125;                // f1_sup / eps band over eps in [band_lo, band_hi] times the weighted sup
  double band_hi = 0.75;
  bool decompose = true;
  DistanceGrid grid;
};

struct DistanceReport {
  std::string function;
  Domain domain = Domain::ball;
  int n = 3;
  NormSpec target;                      // Ap, or Bpq / Fpq (half-space)
  double lambda = 0.0;
  double weighted_sup = 0.0;            // sup |f| w, the eps scale
  std::vector<KernelRun> runs;
  std::vector<std::string> notes;
};

/// Runs s2 profiles over an eps grid (bisected toward the finite/divergent
/// boundary) for each kernel parameter, with f1 sups and s1 upper bounds.
/// Checks the parameter ranges of the theorems: p > 0, alpha > -1; mixed
/// targets need q <= p and a half-space function.
DistanceReport equivalence_experiment(const HarmonicFn& f, const NormSpec& target,
                                      const std::vector<double>& kernel_sweep, const ExperimentOptions& options = {});

}  // namespace bergman
