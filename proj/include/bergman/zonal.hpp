#pragma once

// Building blocks for integrals of axially symmetric integrands: panel
// breakpoints refined toward singular points, superlevel sets of a function
// of one variable, and azimuthal averages over the directions orthogonal to
// the axis.

#include <functional>
#include <span>
#include <vector>

namespace bergman {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
};

/// Adds c, c +- h, c +- 2h, c +- 4h, ... inside [a, b]. A point c outside
/// [a, b] is replaced by the nearer end with h raised to the distance.
void add_refinement(std::vector<double>& breaks, double a, double b, double c, double h);

/// Sorted, de-duplicated breaks with a and b included and everything clipped to [a, b].
std::vector<double> finalize_breaks(std::vector<double> breaks, double a, double b);

/// Maximal subintervals of [scan.front(), scan.back()] where g >= 0. Sign
/// changes between consecutive scan points are located by bisection.
std::vector<Interval> superlevel_intervals(const std::function<double(double)>& g,
                                           std::span<const double> scan, int bisections = 60);

/// [a, b] minus a sorted list of disjoint intervals.
std::vector<Interval> complement(const std::vector<Interval>& set, double a, double b);

/// Scan points for a function on [0, pi] that may vary on scale `scale`
/// near 0: geometric from scale/8 plus `uniform` equispaced points.
std::vector<double> theta_scan(double scale, int uniform = 48);

struct AzimuthNodes {
  std::vector<double> one_minus_xi;
  std::vector<double> weights;   // sum to 1
};

/// Quadrature for the first coordinate xi of a uniform point of S^{d-2}
/// (the directions orthogonal to an axis in R^d). For d = 3 the rule is
/// chosen by the width of the peak at xi = 1 measured in the angle
/// phi = arccos(xi): panels shrink geometrically toward phi = 0.
class AzimuthTable {
 public:
  AzimuthTable(int d, int points);

  int dim() const { return d_; }
  const AzimuthNodes& select(double width) const;

 private:
  int d_;
  std::vector<AzimuthNodes> levels_;   // level j refines to 2^{-j}
};

}  // namespace bergman
