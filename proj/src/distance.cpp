#include "bergman/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"
#include "bergman/zonal.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Mode { s2, reproduce };

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

int dyadic_level(double v) { return static_cast<int>(std::floor(-std::log2(v))); }

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// A node of the inner grid: radius / depth (ball) or height (half-space).
struct InnerNode {
  double r = 0.0;        // ball radius; unused on the half-space
  double depth = 0.0;    // ball depth 1 - r, or the height s
  double s2_factor = 0.0;
  double rep_factor = 0.0;
  int level = 0;         // dyadic level of depth (ball) or of s (half-space)
  std::vector<Interval> inside;
  std::vector<Interval> outside;
};

}  // namespace

struct LevelSetIntegrator::Impl {
  HarmonicFn f;
  LevelSetSpec spec;
  KernelSpec kspec;
  DistanceGrid grid;
  LineRule ref;
  std::optional<BallKernel> ball_kernel;
  std::optional<HalfSpaceKernel> half_kernel;
  AzimuthTable azimuth{2, 1};
  double polar_c = 0.0;
  double extent = 0.0;   // half-space lateral truncation
  std::vector<InnerNode> nodes;
  bool empty = true;

  double ball_inner(const AxialPoint& x, Region region, Mode mode) const;
  double half_inner(const RadialPoint& z, Region region, Mode mode) const;
};

namespace {

void check_grid(const DistanceGrid& g) {
  if (g.outer_levels < 4 || g.outer_points < 1 || g.inner_points < 1 || g.azimuth_points < 1 ||
      g.inner_extra_levels < 1 || g.halfspace_inner_levels < 4) {
    throw PreconditionError("distance grid needs outer_levels >= 4, halfspace_inner_levels >= 4 and positive counts");
  }
}

std::vector<Interval> ball_level_set(const HarmonicFn& f, const LevelSetSpec& spec, double r, double depth) {
  const double w = std::pow(depth, spec.lambda);
  auto g = [&](double th) { return std::abs(f.at(r, depth, th)) * w - spec.eps; };
  const auto scan = theta_scan(f.boundary_peak ? depth : 0.0);
  return superlevel_intervals(g, scan);
}

std::vector<Interval> half_level_set(const HarmonicFn& f, const LevelSetSpec& spec, double s, double extent) {
  const double w = std::pow(s, spec.lambda);
  auto g = [&](double rho) { return std::abs(f.at_radial(rho, s)) * w - spec.eps; };
  std::vector<double> scan{0.0};
  for (double v = std::min(s, 1.0) / 1024.0; v < extent; v *= std::sqrt(2.0)) scan.push_back(v);
  scan.push_back(extent);
  return superlevel_intervals(g, scan);
}

}  // namespace

void LevelSetSpec::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw PreconditionError("level set needs eps > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw PreconditionError("level set needs lambda > 0");
}

bool in_level_set(const HarmonicFn& f, const LevelSetSpec& spec, std::span<const double> point) {
  spec.validate();
  if (f.domain == Domain::ball) {
    if (static_cast<int>(point.size()) != f.n) throw PreconditionError("point has the wrong dimension");
    const double r = norm2(point);
    if (!(r < 1.0)) throw DomainError("level sets live in the open ball");
    return std::abs(f(point)) * std::pow(1.0 - r, spec.lambda) >= spec.eps;
  }
  if (static_cast<int>(point.size()) != f.n + 1) throw PreconditionError("point has the wrong dimension");
  const double s = point.back();
  if (!(s > 0.0)) throw DomainError("level sets live in the open half-space");
  return std::abs(f(point)) * std::pow(s, spec.lambda) >= spec.eps;
}

AxialPoint AxialPoint::from_cartesian(std::span<const double> x, int axis) {
  const double r = norm2(x);
  if (!(r < 1.0)) throw DomainError("point outside the open ball");
  double perp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (static_cast<int>(i) != axis) perp += x[i] * x[i];
  }
  return {r, 1.0 - r, r == 0.0 ? 0.0 : std::atan2(std::sqrt(perp), x[axis])};
}

RadialPoint RadialPoint::from_cartesian(std::span<const double> z) {
  if (z.size() < 2) throw PreconditionError("half-space points need n + 1 >= 2 coordinates");
  const double t = z.back();
  if (!(t > 0.0)) throw DomainError("point outside the open half-space");
  return {norm2(z.first(z.size() - 1)), t};
}

LevelSetIntegrator::LevelSetIntegrator(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                                       const DistanceGrid& grid) {
  spec.validate();
  check_grid(grid);
  if (kernel.domain != f.domain || kernel.n != f.n) {
    throw PreconditionError("kernel and function live on different domains or dimensions");
  }
  if (!f.symmetric()) {
    throw PreconditionError(f.domain == Domain::ball ? "level-set integrals need a zonal function"
                                                     : "level-set integrals need a function radial in y");
  }
  auto impl = std::make_shared<Impl>();
  impl->f = f;
  impl->spec = spec;
  impl->kspec = kernel;
  impl->grid = grid;
  impl->ref = gauss_legendre(grid.inner_points);
  const int n = f.n;
  const LineRule& ref = impl->ref;

  if (f.domain == Domain::ball) {
    impl->ball_kernel.emplace(n, kernel.beta);
    impl->azimuth = AzimuthTable(n, grid.azimuth_points);
    impl->polar_c = polar_density_constant(n);
    const int panels = grid.outer_levels + grid.inner_extra_levels + 2;
    const double beta = kernel.beta;
    for (int j = 0; j < panels; ++j) {
      const double a = std::ldexp(1.0, -j - 1), b = std::ldexp(1.0, -j);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        InnerNode node;
        node.depth = 0.5 * (a + b) + 0.5 * (b - a) * ref.x[i];
        node.r = 1.0 - node.depth;
        const double w = 0.5 * (b - a) * ref.w[i] * std::pow(node.r, n - 1);
        node.s2_factor = n * w * std::pow(node.depth, beta - spec.lambda);
        node.rep_factor = w * std::pow(node.depth * (1.0 + node.r), beta);
        node.level = j;
        impl->nodes.push_back(std::move(node));
      }
    }
    auto sets = parallel_map<std::vector<Interval>>(impl->nodes.size(), [&](std::size_t i) {
      return ball_level_set(f, spec, impl->nodes[i].r, impl->nodes[i].depth);
    });
    for (std::size_t i = 0; i < sets.size(); ++i) {
      impl->nodes[i].outside = complement(sets[i], 0.0, kPi);
      impl->nodes[i].inside = std::move(sets[i]);
    }
  } else {
    impl->half_kernel.emplace(n, kernel.m);
    impl->azimuth = AzimuthTable(n + 1, grid.azimuth_points);
    const int J = grid.halfspace_inner_levels;
    impl->extent = std::ldexp(1.0, J);
    const double m = kernel.m;
    for (int j = -J; j < J; ++j) {
      const double a = std::ldexp(1.0, j), b = std::ldexp(1.0, j + 1);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        InnerNode node;
        node.depth = 0.5 * (a + b) + 0.5 * (b - a) * ref.x[i];
        const double w = 0.5 * (b - a) * ref.w[i];
        node.s2_factor = w * std::pow(node.depth, m - spec.lambda);
        node.rep_factor = w * std::pow(node.depth, m);
        node.level = j;
        impl->nodes.push_back(std::move(node));
      }
    }
    auto sets = parallel_map<std::vector<Interval>>(impl->nodes.size(), [&](std::size_t i) {
      return half_level_set(f, spec, impl->nodes[i].depth, impl->extent);
    });
    for (std::size_t i = 0; i < sets.size(); ++i) {
      impl->nodes[i].outside = complement(sets[i], 0.0, impl->extent);
      impl->nodes[i].inside = std::move(sets[i]);
    }
  }
  impl->empty = std::all_of(impl->nodes.begin(), impl->nodes.end(), [](const InnerNode& v) { return v.inside.empty(); });
  impl_ = std::move(impl);
}

double LevelSetIntegrator::Impl::ball_inner(const AxialPoint& x, Region region, Mode mode) const {
  const int n = f.n;
  const double delta = x.depth;
  if (!(delta > 0.0) || delta > 1.0) throw DomainError("point outside the open ball");
  const int last = std::max(0, dyadic_level(delta)) + grid.inner_extra_levels;
  const double sx = std::sin(x.theta);
  const BallKernel& kernel = *ball_kernel;
  std::vector<double> breaks;
  double total = 0.0;
  for (const auto& node : nodes) {
    if (node.level > last) break;
    const auto& set = region == Region::level_set ? node.inside : node.outside;
    if (set.empty()) continue;
    const double u = x.r * node.r;
    const double omu = delta + node.depth - delta * node.depth;
    double acc = 0.0;
    for (const auto& iv : set) {
      breaks.clear();
      for (int k = 1; k < 8; ++k) breaks.push_back(k * kPi / 8.0);
      add_refinement(breaks, iv.lo, iv.hi, x.theta, 0.5 * (delta + node.depth));
      add_refinement(breaks, iv.lo, iv.hi, 0.0, f.boundary_peak ? 0.5 * node.depth : 1.0 / 16.0);
      const auto b = finalize_breaks(breaks, iv.lo, iv.hi);
      for (std::size_t p = 0; p + 1 < b.size(); ++p) {
        const double half = 0.5 * (b[p + 1] - b[p]), mid = 0.5 * (b[p + 1] + b[p]);
        for (std::size_t i = 0; i < ref.size(); ++i) {
          const double th = mid + half * ref.x[i];
          const double sy = std::sin(th);
          const double wth = half * ref.w[i] * polar_c * (n == 2 ? 1.0 : std::pow(sy, n - 2));
          const double sh = std::sin(0.5 * (x.theta - th));
          const double base = 2.0 * sh * sh;
          const double prod = sx * sy;
          const double width =
              (u > 0.0 && prod > 0.0) ? std::sqrt((omu * omu + 2.0 * u * base) / (u * prod)) : HUGE_VAL;
          const auto& az = azimuth.select(width);
          double k = 0.0;
          for (std::size_t a = 0; a < az.weights.size(); ++a) {
            const double q = kernel(u, omu, base + prod * az.one_minus_xi[a]);
            k += az.weights[a] * (mode == Mode::s2 ? std::abs(q) : q);
          }
          if (mode == Mode::reproduce) k *= f.at(node.r, node.depth, th);
          acc += wth * k;
        }
      }
    }
    total += acc * (mode == Mode::s2 ? node.s2_factor : node.rep_factor);
  }
  if (!std::isfinite(total)) throw EvaluationError("non-finite level-set integral for " + f.label);
  return total;
}

double LevelSetIntegrator::Impl::half_inner(const RadialPoint& z, Region region, Mode mode) const {
  const int n = f.n;
  if (!(z.t > 0.0)) throw DomainError("point outside the open half-space");
  const int first = -dyadic_level(z.t) - grid.inner_extra_levels - 1;
  const double area = sphere_area(n);
  const HalfSpaceKernel& kernel = *half_kernel;
  std::vector<double> breaks;
  double total = 0.0;
  for (const auto& node : nodes) {
    if (node.level < first) continue;
    const auto& set = region == Region::level_set ? node.inside : node.outside;
    if (set.empty()) continue;
    const double s = node.depth;
    const double T = z.t + s;
    double acc = 0.0;
    for (const auto& iv : set) {
      breaks.clear();
      add_refinement(breaks, iv.lo, iv.hi, z.rho, 0.5 * T);
      add_refinement(breaks, iv.lo, iv.hi, 0.0, 0.5 * T);
      const auto b = finalize_breaks(breaks, iv.lo, iv.hi);
      for (std::size_t p = 0; p + 1 < b.size(); ++p) {
        const double half = 0.5 * (b[p + 1] - b[p]), mid = 0.5 * (b[p + 1] + b[p]);
        for (std::size_t i = 0; i < ref.size(); ++i) {
          const double rho = mid + half * ref.x[i];
          const double w = half * ref.w[i] * area * (n == 1 ? 1.0 : std::pow(rho, n - 1));
          const double d = z.rho - rho;
          const double prod = 2.0 * z.rho * rho;
          const double width = prod > 0.0 ? std::sqrt(2.0 * (d * d + T * T) / prod) : HUGE_VAL;
          const auto& az = azimuth.select(width);
          double k = 0.0;
          for (std::size_t a = 0; a < az.weights.size(); ++a) {
            const double q = kernel(d * d + prod * az.one_minus_xi[a], T);
            k += az.weights[a] * (mode == Mode::s2 ? std::abs(q) : q);
          }
          if (mode == Mode::reproduce) k *= f.at_radial(rho, s);
          acc += w * k;
        }
      }
    }
    total += acc * (mode == Mode::s2 ? node.s2_factor : node.rep_factor);
  }
  if (!std::isfinite(total)) throw EvaluationError("non-finite level-set integral for " + f.label);
  return total;
}

const HarmonicFn& LevelSetIntegrator::function() const { return impl_->f; }
const LevelSetSpec& LevelSetIntegrator::spec() const { return impl_->spec; }
const KernelSpec& LevelSetIntegrator::kernel() const { return impl_->kspec; }
const DistanceGrid& LevelSetIntegrator::grid() const { return impl_->grid; }
bool LevelSetIntegrator::empty() const { return impl_->empty; }

double LevelSetIntegrator::s2_inner(const AxialPoint& x) const {
  if (impl_->f.domain != Domain::ball) throw PreconditionError("axial points belong to the ball");
  if (impl_->empty) return 0.0;
  return impl_->ball_inner(x, Region::level_set, Mode::s2);
}

double LevelSetIntegrator::s2_inner(const RadialPoint& z) const {
  if (impl_->f.domain != Domain::halfspace) throw PreconditionError("radial points belong to the half-space");
  if (impl_->empty) return 0.0;
  return impl_->half_inner(z, Region::level_set, Mode::s2);
}

double LevelSetIntegrator::s2_inner(std::span<const double> point) const {
  if (impl_->f.domain == Domain::ball) return s2_inner(AxialPoint::from_cartesian(point, impl_->f.axis));
  return s2_inner(RadialPoint::from_cartesian(point));
}

double LevelSetIntegrator::reproduce(const AxialPoint& x, Region region) const {
  if (impl_->f.domain != Domain::ball) throw PreconditionError("axial points belong to the ball");
  if (region == Region::level_set && impl_->empty) return 0.0;
  return impl_->ball_inner(x, region, Mode::reproduce);
}

double LevelSetIntegrator::reproduce(const RadialPoint& z, Region region) const {
  if (impl_->f.domain != Domain::halfspace) throw PreconditionError("radial points belong to the half-space");
  if (region == Region::level_set && impl_->empty) return 0.0;
  return impl_->half_inner(z, region, Mode::reproduce);
}

double LevelSetIntegrator::reproduce(std::span<const double> point, Region region) const {
  if (impl_->f.domain == Domain::ball) return reproduce(AxialPoint::from_cartesian(point, impl_->f.axis), region);
  return reproduce(RadialPoint::from_cartesian(point), region);
}

double s2_inner(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                std::span<const double> point, const DistanceGrid& grid) {
  return LevelSetIntegrator(f, spec, kernel, grid).s2_inner(point);
}

// ---------------------------------------------------------------------------
// Outer integrals

namespace {

struct OuterNode {
  double a = 0.0;       // ball: depth; half-space: |x|
  double b = 0.0;       // ball: theta; half-space: t
  double w = 0.0;
  int level = 0;        // 0-based truncation index
};

std::vector<OuterNode> ball_outer_nodes(const HarmonicFn& f, double alpha, const DistanceGrid& grid) {
  const int n = f.n;
  const LineRule ref = gauss_legendre(grid.outer_points);
  const double c = polar_density_constant(n);
  std::vector<OuterNode> out;
  for (int k = 0; k < grid.outer_levels; ++k) {
    const double lo = std::ldexp(1.0, -k - 1), hi = k == 0 ? 1.0 : std::ldexp(1.0, -k);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double depth = 0.5 * (lo + hi) + 0.5 * (hi - lo) * ref.x[i];
      const double r = 1.0 - depth;
      const double wr = 0.5 * (hi - lo) * ref.w[i] * n * std::pow(r, n - 1) * std::pow(depth, alpha);
      std::vector<double> breaks;
      for (int j = 1; j < 8; ++j) breaks.push_back(j * kPi / 8.0);
      add_refinement(breaks, 0.0, kPi, 0.0, f.boundary_peak ? 0.25 * depth : 1.0 / 16.0);
      const auto b = finalize_breaks(breaks, 0.0, kPi);
      for (std::size_t p = 0; p + 1 < b.size(); ++p) {
        const double half = 0.5 * (b[p + 1] - b[p]), mid = 0.5 * (b[p + 1] + b[p]);
        for (std::size_t q = 0; q < ref.size(); ++q) {
          const double th = mid + half * ref.x[q];
          const double wth = half * ref.w[q] * c * (n == 2 ? 1.0 : std::pow(std::sin(th), n - 2));
          out.push_back({depth, th, wr * wth, k});
        }
      }
    }
  }
  return out;
}

std::vector<OuterNode> half_outer_nodes(int n, double alpha, const DistanceGrid& grid) {
  const LineRule ref = gauss_legendre(grid.outer_points);
  const int L = grid.outer_levels;
  struct Axis {
    double x, w;
    int level;
  };
  std::vector<Axis> lat, hgt;
  auto panel = [&](std::vector<Axis>& into, double a, double b, int level) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      into.push_back({0.5 * (a + b) + 0.5 * (b - a) * ref.x[i], 0.5 * (b - a) * ref.w[i], level});
    }
  };
  panel(lat, 0.0, std::ldexp(1.0, -L), 1);
  for (int j = -L; j < L; ++j) {
    panel(lat, std::ldexp(1.0, j), std::ldexp(1.0, j + 1), std::max(1, j + 1));
    panel(hgt, std::ldexp(1.0, j), std::ldexp(1.0, j + 1), std::max(-j, j + 1));
  }
  const double area = sphere_area(n);
  std::vector<OuterNode> out;
  for (const auto& y : lat) {
    for (const auto& t : hgt) {
      const double w = y.w * area * std::pow(y.x, n - 1) * t.w * std::pow(t.x, alpha);
      out.push_back({y.x, t.x, w, std::max(y.level, t.level) - 1});
    }
  }
  return out;
}

std::vector<double> outer_cutoffs(int count) {
  std::vector<double> c;
  for (int k = 1; k <= count; ++k) c.push_back(std::ldexp(1.0, -k));
  return c;
}

}  // namespace

DivergenceProfile s2_profile(const LevelSetIntegrator& integ, double p, double alpha) {
  if (!(p > 0.0) || !std::isfinite(p)) throw PreconditionError("s2 needs a finite exponent p > 0");
  if (!(alpha > -1.0)) throw PreconditionError("s2 needs alpha > -1");
  const HarmonicFn& f = integ.function();
  const DistanceGrid& grid = integ.grid();
  const int levels = grid.outer_levels;
  const auto cutoffs = outer_cutoffs(levels);
  if (integ.empty()) {
    auto profile = classify_profile(cutoffs, std::vector<double>(levels, 0.0));
    profile.note = "empty level set";
    return profile;
  }
  const auto nodes = f.domain == Domain::ball ? ball_outer_nodes(f, alpha, grid) : half_outer_nodes(f.n, alpha, grid);
  // A failed evaluation marks its level; the profile stops below it.
  const auto vals = parallel_map<double>(nodes.size(), [&](std::size_t i) {
    const auto& x = nodes[i];
    try {
      const double inner = f.domain == Domain::ball ? integ.s2_inner(AxialPoint{1.0 - x.a, x.a, x.b})
                                                    : integ.s2_inner(RadialPoint{x.a, x.b});
      return x.w * std::pow(inner, p);
    } catch (const EvaluationError&) {
      return std::numeric_limits<double>::quiet_NaN();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::vector<double> per_level(levels, 0.0);
  int failed = levels;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (std::isnan(vals[i])) {
      failed = std::min(failed, nodes[i].level);
      continue;
    }
    per_level[nodes[i].level] += vals[i];
  }
  std::vector<double> values(levels, 0.0);
  for (int k = 0; k < levels; ++k) values[k] = per_level[k] + (k > 0 ? values[k - 1] : 0.0);
  if (failed < levels) {
    values.resize(failed);
    std::vector<double> kept(cutoffs.begin(), cutoffs.begin() + failed);
    DivergenceProfile profile;
    if (failed >= 2) {
      profile = classify_profile(kept, values);
    } else {
      profile.cutoffs = kept;
      profile.values = values;
    }
    profile.classification = Classification::inconclusive;
    profile.note = "quadrature failed at truncation level " + std::to_string(failed + 1) + "; profile stops there";
    return profile;
  }
  return classify_profile(cutoffs, values);
}

DivergenceProfile s2_profile(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel, double p,
                             double alpha, const DistanceGrid& grid) {
  return s2_profile(LevelSetIntegrator(f, spec, kernel, grid), p, alpha);
}

// ---------------------------------------------------------------------------
// Decomposition

namespace {

HarmonicFn part(const LevelSetIntegrator& integ, Region region, const std::string& name) {
  const HarmonicFn& f = integ.function();
  HarmonicFn g;
  g.domain = f.domain;
  g.n = f.n;
  g.axis = f.axis;
  g.label = name + "[" + f.label + ", eps=" + fmt_double(integ.spec().eps) + "]";
  g.eval = [integ, region](std::span<const double> x) { return integ.reproduce(x, region); };
  if (f.domain == Domain::ball) {
    g.zonal = [integ, region](double r, double d, double th) {
      return integ.reproduce(AxialPoint{r, d, th}, region);
    };
  } else {
    g.radial = [integ, region](double rho, double s) { return integ.reproduce(RadialPoint{rho, s}, region); };
  }
  return g;
}

}  // namespace

Decomposition decompose(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel,
                        const DistanceGrid& grid) {
  spec.validate();
  const double param = kernel.domain == Domain::ball ? kernel.beta : kernel.m;
  const double need = std::max(spec.lambda - 1.0, 0.0);
  if (!(param > need)) {
    throw PreconditionError(std::string(kernel.domain == Domain::ball ? "beta" : "m") +
                            " > max(lambda - 1, 0) is required for the representation of A^inf_lambda (" +
                            fmt_double(param) + " <= " + fmt_double(need) + ")");
  }
  LevelSetIntegrator integ(f, spec, kernel, grid);
  return {part(integ, Region::complement, "f1"), part(integ, Region::level_set, "f2"), integ};
}

WeightedSup f1_weighted_sup(const Decomposition& d) {
  const HarmonicFn& f = d.integrator.function();
  const double lambda = d.integrator.spec().lambda;
  const int K = d.integrator.grid().outer_levels;
  const std::vector<double> offsets = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<OuterNode> pts;   // a, b as in OuterNode; w is the weight factor
  if (f.domain == Domain::ball) {
    pts.push_back({1.0, 0.0, 1.0, 0});
    std::vector<double> depths = {0.75, 0.5};
    for (int j = 2; j <= K; ++j) depths.push_back(std::ldexp(1.0, -j));
    for (double delta : depths) {
      std::vector<double> th = {0.0};
      for (double s : offsets) {
        if (s * delta < kPi) th.push_back(s * delta);
      }
      for (int k = 1; k <= 8; ++k) th.push_back(k * kPi / 8.0);
      for (double t : th) pts.push_back({delta, t, std::pow(delta, lambda), 0});
    }
  } else {
    for (int j = -K; j <= K / 2; ++j) {
      const double t = std::ldexp(1.0, j);
      std::vector<double> rho = {0.0, 1.0, 2.0, 4.0};
      for (double s : offsets) rho.push_back(s * t);
      for (double a : rho) pts.push_back({a, t, std::pow(t, lambda), 0});
    }
  }
  const auto vals = parallel_map<double>(pts.size(), [&](std::size_t i) {
    const auto& x = pts[i];
    const double v = f.domain == Domain::ball
                         ? d.integrator.reproduce(AxialPoint{1.0 - x.a, x.a, x.b}, Region::complement)
                         : d.integrator.reproduce(RadialPoint{x.a, x.b}, Region::complement);
    return std::abs(v) * x.w;
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] > vals[best]) best = i;
  }
  WeightedSup out;
  out.value = vals[best];
  if (f.domain == Domain::ball) {
    out.witness = f.ball_point(1.0 - pts[best].a, pts[best].b);
  } else {
    out.witness.assign(f.n + 1, 0.0);
    out.witness[0] = pts[best].a;
    out.witness[f.n] = pts[best].b;
  }
  return out;
}

double reproduction_error(const Decomposition& d) {
  const HarmonicFn& f = d.integrator.function();
  std::vector<std::pair<double, double>> pts;
  if (f.domain == Domain::ball) {
    for (double r : {0.0, 0.35, 0.7}) {
      for (int k = 0; k <= 4; ++k) pts.emplace_back(r, k * kPi / 4.0);
    }
  } else {
    for (double a : {0.0, 0.5, 1.0}) {
      for (double t : {0.5, 1.0, 2.0}) pts.emplace_back(a, t);
    }
  }
  const auto errs = parallel_map<double>(pts.size(), [&](std::size_t i) {
    const auto [a, b] = pts[i];
    if (f.domain == Domain::ball) {
      const AxialPoint x{a, 1.0 - a, b};
      const double sum = d.integrator.reproduce(x, Region::complement) + d.integrator.reproduce(x, Region::level_set);
      return std::abs(sum - f.at(a, 1.0 - a, b));
    }
    const RadialPoint z{a, b};
    const double sum = d.integrator.reproduce(z, Region::complement) + d.integrator.reproduce(z, Region::level_set);
    return std::abs(sum - f.at_radial(a, b));
  });
  return *std::max_element(errs.begin(), errs.end());
}

double s1_upper(const HarmonicFn& f, const LevelSetSpec& spec, const KernelSpec& kernel, double p, double alpha,
                const DistanceGrid& grid) {
  const auto dec = decompose(f, spec, kernel, grid);
  const auto profile = s2_profile(dec.integrator, p, alpha);
  if (profile.classification != Classification::finite) {
    throw PreconditionError("s1 upper bound needs a FINITE s2 profile (f2 in the target space); got " +
                            std::string(to_string(profile.classification)));
  }
  return f1_weighted_sup(dec).value;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

double target_lambda(const HarmonicFn& f, const NormSpec& t) {
  const double dim = f.domain == Domain::ball ? f.n : f.n + 1;
  if (t.scale == Scale::Ap) return (t.alpha + dim) / t.p;
  // Mixed half-space norms: lateral exponent p, height exponent q.
  return f.n / t.p + (t.alpha + 1.0) / *t.q;
}

EpsilonRow run_eps(const HarmonicFn& f, const NormSpec& target, const KernelSpec& kernel, double eps,
                   double lambda, const ExperimentOptions& opt) {
  EpsilonRow row;
  row.eps = eps;
  const LevelSetSpec spec{eps, lambda};
  if (opt.decompose) {
    const auto dec = decompose(f, spec, kernel, opt.grid);
    row.empty_level_set = dec.integrator.empty();
    row.profile = s2_profile(dec.integrator, target.p, target.alpha);
    const auto sup = f1_weighted_sup(dec);
    row.f1_sup = sup.value;
    row.f1_witness = sup.witness;
    row.reproduction_error = reproduction_error(dec);
    bool member = row.profile.classification == Classification::finite;
    if (member && target.scale != Scale::Ap) {
      NormGrid coarse;
      coarse.shells = 12;
      coarse.points = 4;
      const auto norm = mixed_norm(dec.f2, target.scale, target.p, *target.q, target.alpha, coarse);
      row.target_norm = norm.value;
      member = !norm.divergent && norm.profile.classification == Classification::finite;
      if (!member) row.note = "f2 mixed norm not FINITE";
    }
    if (member) row.s1_upper = row.f1_sup;
  } else {
    const LevelSetIntegrator integ(f, spec, kernel, opt.grid);
    row.empty_level_set = integ.empty();
    row.profile = s2_profile(integ, target.p, target.alpha);
  }
  if (!row.profile.note.empty()) row.note += (row.note.empty() ? "" : "; ") + row.profile.note;
  return row;
}

}  // namespace

DistanceReport equivalence_experiment(const HarmonicFn& f, const NormSpec& target,
                                      const std::vector<double>& kernel_sweep, const ExperimentOptions& opt) {
  if (!(target.p > 0.0) || !std::isfinite(target.p)) throw PreconditionError("distance experiments need 0 < p < inf");
  if (!(target.alpha > -1.0)) throw PreconditionError("distance experiments need alpha > -1");
  if (target.scale == Scale::Bpq || target.scale == Scale::Fpq) {
    if (f.domain != Domain::halfspace) throw PreconditionError("mixed-norm targets are stated on the half-space");
    if (!target.q || !(*target.q > 0.0) || !(*target.q <= target.p)) {
      throw PreconditionError("mixed-norm targets need 0 < q <= p");
    }
  } else if (target.scale != Scale::Ap) {
    throw PreconditionError(std::string("distance experiments target A^p_alpha, B or F; got ") +
                            to_string(target.scale));
  }
  if (kernel_sweep.empty()) throw PreconditionError("empty kernel sweep");

  DistanceReport rep;
  rep.function = f.label;
  rep.domain = f.domain;
  rep.n = f.n;
  rep.target = target;
  rep.lambda = target_lambda(f, target);
  const auto sup = ainf_norm(f, rep.lambda);
  if (sup.unbounded) throw PreconditionError("f is not in A^inf_lambda for lambda = " + fmt_double(rep.lambda));
  rep.weighted_sup = sup.value;
  if (!(rep.weighted_sup > 0.0)) throw PreconditionError("f vanishes identically; nothing to measure");
  if (target.scale != Scale::Ap) rep.notes.push_back("mixed target: only the one-sided bound is asserted");

  const double S = rep.weighted_sup;
  std::vector<double> grid_eps;
  for (double c : opt.eps_factors) grid_eps.push_back(c * S);
  for (double e : opt.extra_eps) grid_eps.push_back(e);
  std::sort(grid_eps.begin(), grid_eps.end());
  grid_eps.erase(std::unique(grid_eps.begin(), grid_eps.end()), grid_eps.end());

  for (double param : kernel_sweep) {
    const KernelSpec kernel = f.domain == Domain::ball ? KernelSpec::ball(f.n, param)
                                                       : KernelSpec::halfspace(f.n, static_cast<int>(param));
    if (f.domain == Domain::halfspace && param != std::floor(param)) {
      throw PreconditionError("half-space kernel orders m are integers");
    }
    KernelRun run;
    run.kernel_param = param;
    for (double e : grid_eps) run.rows.push_back(run_eps(f, target, kernel, e, rep.lambda, opt));

    auto bracket = [&run] {
      double lo = 0.0;
      for (const auto& r : run.rows) {
        if (r.profile.classification == Classification::divergent) lo = std::max(lo, r.eps);
      }
      double hi = HUGE_VAL;
      for (const auto& r : run.rows) {
        if (r.profile.classification == Classification::finite && r.eps > lo) hi = std::min(hi, r.eps);
      }
      return std::pair{lo, hi};
    };
    auto [lo, hi] = bracket();
    while (lo > 0.0 && std::isfinite(hi) && hi - lo > opt.bisect_width * S) {
      const double mid = 0.5 * (lo + hi);
      auto row = run_eps(f, target, kernel, mid, rep.lambda, opt);
      const auto c = row.profile.classification;
      run.rows.push_back(std::move(row));
      if (c == Classification::finite) {
        hi = mid;
      } else if (c == Classification::divergent) {
        lo = mid;
      } else {
        run.note = "bisection stopped at an INCONCLUSIVE eps = " + fmt_double(mid);
        break;
      }
    }
    std::sort(run.rows.begin(), run.rows.end(), [](const auto& a, const auto& b) { return a.eps < b.eps; });
    std::tie(run.bracket_lo, run.bracket_hi) = bracket();

    bool seen_finite = false;
    for (const auto& r : run.rows) {
      if (r.profile.classification == Classification::finite) seen_finite = true;
      if (seen_finite && r.profile.classification == Classification::divergent) run.coherent = false;
    }
    if (!run.coherent) run.note += (run.note.empty() ? "" : "; ") + std::string("FINITE below a DIVERGENT eps");
    for (std::size_t i = 0; i + 1 < run.rows.size(); ++i) {
      const auto& a = run.rows[i].profile.values;
      const auto& b = run.rows[i + 1].profile.values;
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        if (b[k] > a[k] * (1.0 + 1e-6) + 1e-300) run.monotone = false;
      }
    }
    run.ratio_lo = HUGE_VAL;
    run.ratio_hi = 0.0;
    for (const auto& r : run.rows) {
      if (r.eps < opt.band_lo * S * (1 - 1e-12) || r.eps > opt.band_hi * S * (1 + 1e-12)) continue;
      run.ratio_lo = std::min(run.ratio_lo, r.f1_sup / r.eps);
      run.ratio_hi = std::max(run.ratio_hi, r.f1_sup / r.eps);
    }
    if (run.ratio_hi == 0.0) run.ratio_lo = 0.0;
    rep.runs.push_back(std::move(run));
  }
  return rep;
}

}  // namespace bergman
