#pragma once

// Whitney-type decompositions: dyadic cubes of the upper half-space whose
// side equals their lower height, and cells of the unit ball made of dyadic
// annuli times spherical caps.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace bergman {

/// Half-open cube [corner, corner + side)^{n+1} of R^{n+1}_+ at level j:
/// side 2^j, heights [2^j, 2^{j+1}).
struct WhitneyCube {
  int level = 0;
  std::vector<std::int64_t> index;   // lateral lattice index, corner_i = index_i * side
  std::vector<double> corner;        // n lateral coordinates, then the height 2^j
  double side = 1.0;

  int dim() const { return static_cast<int>(corner.size()); }
  bool contains(std::span<const double> z) const;
  std::vector<double> center() const;
  double volume() const;
};

/// The cube containing z (ties go to the cube whose closed lower faces hold z).
WhitneyCube locate_cube(std::span<const double> z);

/// Half-open box prod [lo_i, hi_i) in R^{n+1}_+, the last coordinate the height.
struct HalfBox {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool empty() const;
};

/// Cubes meeting the box at levels j_min..j_max, ordered by level and then
/// lexicographically by lattice index. Throws PreconditionError unless the
/// box heights lie in [2^j_min, 2^{j_max+1}).
std::vector<WhitneyCube> whitney_halfspace(const HalfBox& region, int level_min, int level_max);

/// Cell {1 - 2^-j <= |x| < 1 - 2^-(j+1), angle(x', center) <= cap_radius}.
struct BallCell {
  int level = 1;
  std::vector<double> cap_center;
  double cap_radius = 0.5;

  double r_lo() const;
  double r_hi() const;
  bool contains(std::span<const double> x) const;
  /// Euclidean diameter of the cell.
  double diameter() const;
};

struct BallDecomposition {
  int n = 3;
  int level_max = 1;
  std::vector<BallCell> cells;          // by level, then net order
  std::vector<int> cells_per_level;     // index 0 is level 1
  double c1 = 0.0;                      // min diameter / distance to the sphere
  double c2 = 0.0;                      // max diameter / distance to the sphere
  int overlap = 0;                      // max cells containing one sampled point

  /// Cells containing x (empty for |x| < 1/2 or beyond the last annulus).
  std::vector<std::size_t> cells_containing(std::span<const double> x) const;
};

/// Annuli j = 1..level_max, each covered by caps of angular radius 2^-j
/// centred on a greedy separated net (candidate order shuffled with seed 0).
/// The overlap is measured on 10^4 sampled points (seed 0).
BallDecomposition whitney_ball(int n, int level_max);

struct DiscreteComparison {
  double sum = 0.0;        // sum over cubes of g(center) s_center^gamma volume
  double integral = 0.0;   // Gauss product rule over the same cubes
  double ratio = 0.0;      // sum / integral
};

/// Compares the cube sum of a nonnegative field g(z) s^gamma with its
/// integral over the union of the cubes. Throws EvaluationError on a
/// non-finite or negative value.
DiscreteComparison discrete_vs_integral(const std::function<double(std::span<const double>)>& g, double gamma,
                                        std::span<const WhitneyCube> cubes, int points = 6);

/// CSV rows level,index...,corner...,side. The lateral dimension n sizes the
/// header; -1 takes it from the cubes.
void write_cubes_csv(std::ostream& os, std::span<const WhitneyCube> cubes, int n = -1);
/// CSV rows level,center...,cap_radius,r_lo,r_hi.
void write_cells_csv(std::ostream& os, const BallDecomposition& d);

}  // namespace bergman
