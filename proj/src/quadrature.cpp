#include "bergman/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bergman/errors.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format_point(std::span<const double> x) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

void require_finite(double v, const char* what, std::span<const double> where) {
  if (!std::isfinite(v)) {
    throw EvaluationError(std::string("non-finite ") + what + " value at " + format_point(where));
  }
}

}  // namespace

BallPoint BallPoint::polar(double r, std::vector<double> dir) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("ball point radius must lie in [0, 1)");
  double norm2 = 0.0;
  for (double c : dir) norm2 += c * c;
  if (dir.empty() || std::abs(std::sqrt(norm2) - 1.0) > 1e-12) {
    throw DomainError("ball point direction must be a unit vector");
  }
  return BallPoint{r, std::move(dir)};
}

BallPoint BallPoint::from_cartesian(std::span<const double> x) {
  double norm2 = 0.0;
  for (double c : x) norm2 += c * c;
  const double r = std::sqrt(norm2);
  if (!(r < 1.0)) throw DomainError("point lies outside the open unit ball");
  std::vector<double> dir(x.size(), 0.0);
  if (r == 0.0) {
    dir[0] = 1.0;
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) dir[i] = x[i] / r;
  }
  return BallPoint{r, std::move(dir)};
}

std::vector<double> BallPoint::cartesian() const {
  std::vector<double> x(dir.size());
  for (std::size_t i = 0; i < dir.size(); ++i) x[i] = r * dir[i];
  return x;
}

HalfPoint HalfPoint::make(std::vector<double> y, double s) {
  if (!(s > 0.0)) throw DomainError("half-space point needs a positive height");
  if (y.empty()) throw DomainError("half-space point needs at least one lateral coordinate");
  return HalfPoint{std::move(y), s};
}

double LineRule::sum_weights() const {
  double s = 0.0;
  for (double v : w) s += v;
  return s;
}

LineRule gauss_legendre(int count) {
  if (count < 1) throw PreconditionError("Gauss-Legendre rule needs at least one node");
  LineRule rule;
  rule.x.assign(count, 0.0);
  rule.w.assign(count, 0.0);
  const int half = (count + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (count + 0.5));
    double pp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= count; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = count * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-16) break;
    }
    rule.x[i] = -z;
    rule.x[count - 1 - i] = z;
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.w[i] = w;
    rule.w[count - 1 - i] = w;
  }
  if (count % 2 == 1) rule.x[count / 2] = 0.0;
  return rule;
}

LineRule gauss_gegenbauer(int count, double a) {
  if (count < 1) throw PreconditionError("Gauss-Gegenbauer rule needs at least one node");
  if (!(a > -1.0)) throw PreconditionError("Gegenbauer weight exponent must exceed -1");
  if (a == 0.0) {
    LineRule r = gauss_legendre(count);
    for (double& w : r.w) w *= 0.5;
    return r;
  }
  LineRule rule;
  if (a == -0.5) {
    for (int j = 0; j < count; ++j) {
      rule.x.push_back(-std::cos((j + 0.5) * kPi / count));
      rule.w.push_back(1.0 / count);
    }
    return rule;
  }
  // Monic recurrence p_{k+1} = x p_k - b_k p_{k-1}, b_k = k(k+2a)/((2k+2a+1)(2k+2a-1)).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(count, count);
  for (int k = 1; k < count; ++k) {
    const double b = k * (k + 2.0 * a) / ((2.0 * k + 2.0 * a + 1.0) * (2.0 * k + 2.0 * a - 1.0));
    jac(k, k - 1) = jac(k - 1, k) = std::sqrt(b);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jac);
  rule.x.resize(count);
  rule.w.resize(count);
  for (int i = 0; i < count; ++i) {
    rule.x[i] = solver.eigenvalues()(i);
    const double v = solver.eigenvectors()(0, i);
    rule.w[i] = v * v;
  }
  // Symmetrize away eigen-solver noise.
  for (int i = 0; i < count / 2; ++i) {
    const double x = 0.5 * (rule.x[count - 1 - i] - rule.x[i]);
    const double w = 0.5 * (rule.w[count - 1 - i] + rule.w[i]);
    rule.x[i] = -x;
    rule.x[count - 1 - i] = x;
    rule.w[i] = rule.w[count - 1 - i] = w;
  }
  if (count % 2 == 1) rule.x[count / 2] = 0.0;
  const double total = rule.sum_weights();
  for (double& w : rule.w) w /= total;
  return rule;
}

void append_mapped(LineRule& rule, const LineRule& ref, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    rule.x.push_back(mid + half * ref.x[i]);
    rule.w.push_back(half * ref.w[i]);
  }
}

LineRule gauss_on(double a, double b, int count) {
  LineRule rule;
  append_mapped(rule, gauss_legendre(count), a, b);
  return rule;
}

namespace {

void panel_sum(const std::function<void(double, std::span<double>)>& g, double a, double b, const LineRule& ref,
               std::span<double> out, std::span<double> scratch) {
  std::fill(out.begin(), out.end(), 0.0);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    g(mid + half * ref.x[i], scratch);
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (!std::isfinite(scratch[k])) throw EvaluationError("non-finite integrand at " + std::to_string(mid + half * ref.x[i]));
      out[k] += half * ref.w[i] * scratch[k];
    }
  }
}

void adaptive_step(const std::function<void(double, std::span<double>)>& g, double a, double b, const LineRule& ref,
                   std::vector<double> whole, std::span<double> acc, const AdaptiveOptions& opts, int depth) {
  const std::size_t m = acc.size();
  const double c = 0.5 * (a + b);
  std::vector<double> left(m), right(m), scratch(m);
  panel_sum(g, a, c, ref, left, scratch);
  panel_sum(g, c, b, ref, right, scratch);
  double diff = 0.0, size = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    diff = std::max(diff, std::abs(left[k] + right[k] - whole[k]));
    size = std::max(size, std::abs(left[k] + right[k]));
  }
  if (diff <= opts.rel_tol * size + opts.abs_tol || depth >= opts.max_depth || !(c > a && c < b)) {
    for (std::size_t k = 0; k < m; ++k) acc[k] += left[k] + right[k];
    return;
  }
  adaptive_step(g, a, c, ref, std::move(left), acc, opts, depth + 1);
  adaptive_step(g, c, b, ref, std::move(right), acc, opts, depth + 1);
}

}  // namespace

void adaptive_gauss(const std::function<void(double, std::span<double>)>& g, double a, double b,
                    const LineRule& ref, std::span<double> acc, const AdaptiveOptions& opts) {
  if (!(b > a)) return;
  std::vector<double> whole(acc.size()), scratch(acc.size());
  panel_sum(g, a, b, ref, whole, scratch);
  adaptive_step(g, a, b, ref, std::move(whole), acc, opts, 0);
}

double adaptive_gauss(const std::function<double(double)>& g, double a, double b, const LineRule& ref,
                      const AdaptiveOptions& opts) {
  double acc = 0.0;
  adaptive_gauss([&](double x, std::span<double> out) { out[0] = g(x); }, a, b, ref, std::span<double>(&acc, 1),
                 opts);
  return acc;
}

LineRule geometric_offsets(double length, int panels, int points) {
  if (panels < 1) throw PreconditionError("geometric rule needs at least one panel");
  const LineRule ref = gauss_legendre(points);
  LineRule rule;
  double hi = length;
  for (int j = 0; j + 1 < panels; ++j) {
    const double lo = 0.5 * hi;
    append_mapped(rule, ref, lo, hi);
    hi = lo;
  }
  append_mapped(rule, ref, 0.0, hi);
  return rule;
}

std::vector<double> geometric_breaks(double a, double b, double h, int max_panels) {
  std::vector<double> breaks{a};
  if (!(b > a)) return breaks;
  if (!(h > 0.0) || h >= b - a || max_panels <= 1) {
    breaks.push_back(b);
    return breaks;
  }
  double step = h;
  while (a + step < b && static_cast<int>(breaks.size()) < max_panels) {
    breaks.push_back(a + step);
    step *= 2.0;
  }
  breaks.push_back(b);
  return breaks;
}

SphereRule make_sphere_rule(int n, int degree) {
  if (n < 2) throw PreconditionError("sphere rules need ambient dimension n >= 2");
  if (degree < 0) throw PreconditionError("sphere rule degree must be nonnegative");
  SphereRule rule;
  rule.dim = n;
  rule.degree = degree;
  if (n == 2) {
    const int m = degree + 1;
    for (int j = 0; j < m; ++j) {
      const double phi = 2.0 * kPi * j / m;
      rule.coords.push_back(std::cos(phi));
      rule.coords.push_back(std::sin(phi));
      rule.weights.push_back(1.0 / m);
    }
    return rule;
  }
  const int q = (degree + 2) / 2;
  const LineRule polar = gauss_gegenbauer(q, 0.5 * (n - 3));
  const SphereRule sub = make_sphere_rule(n - 1, degree);
  for (std::size_t i = 0; i < polar.size(); ++i) {
    const double t = polar.x[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (std::size_t j = 0; j < sub.size(); ++j) {
      rule.coords.push_back(t);
      for (double c : sub.node(j)) rule.coords.push_back(s * c);
      rule.weights.push_back(polar.w[i] * sub.weights[j]);
    }
  }
  return rule;
}

double integrate_sphere(const SphereField& g, const SphereRule& rule) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double v = g(rule.node(i));
    require_finite(v, "integrand", rule.node(i));
    sum += rule.weights[i] * v;
  }
  return sum;
}

RadialRule make_radial_rule(int boundary_refinement, int points) {
  if (boundary_refinement < 0) throw PreconditionError("boundary refinement must be >= 0");
  const LineRule depth = geometric_offsets(1.0, boundary_refinement + 1, points);
  RadialRule rule;
  rule.boundary_refinement = boundary_refinement;
  rule.degree = 2 * points - 1;
  // geometric_offsets lists panels from depth 1 toward 0, each in increasing
  // depth; reverse within panels to get increasing radius overall.
  const std::size_t np = static_cast<std::size_t>(points);
  for (std::size_t p = 0; p < depth.size() / np; ++p) {
    for (std::size_t k = np; k-- > 0;) {
      const std::size_t i = p * np + k;
      rule.depths.push_back(depth.x[i]);
      rule.nodes.push_back(1.0 - depth.x[i]);
      rule.weights.push_back(depth.w[i]);
    }
  }
  return rule;
}

double integrate_radial(const std::function<double(double, double)>& g, const RadialRule& rule) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double v = g(rule.nodes[i], rule.depths[i]);
    if (!std::isfinite(v)) {
      throw EvaluationError("non-finite radial integrand at r = " + std::to_string(rule.nodes[i]));
    }
    sum += rule.weights[i] * v;
  }
  return sum;
}

double integrate_ball(const SphereField& g, const SphereRule& srule, const RadialRule& rrule) {
  const int n = srule.dim;
  std::vector<double> x(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < rrule.size(); ++i) {
    const double r = rrule.nodes[i];
    double shell = 0.0;
    for (std::size_t j = 0; j < srule.size(); ++j) {
      const auto dir = srule.node(j);
      for (int c = 0; c < n; ++c) x[c] = r * dir[c];
      const double v = g(x);
      if (!std::isfinite(v)) {
        throw EvaluationError("non-finite integrand at r = " + std::to_string(r) + ", dir = " +
                              format_point(dir));
      }
      shell += srule.weights[j] * v;
    }
    sum += rrule.weights[i] * n * std::pow(r, n - 1) * shell;
  }
  return sum;
}

std::vector<ShellAverage> radial_profile(const SphereField& g, const SphereRule& srule,
                                         std::span<const double> r_grid) {
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (!(r_grid[i] >= 0.0 && r_grid[i] < 1.0)) {
      throw PreconditionError("radial profile grid must lie in [0, 1)");
    }
    if (i > 0 && !(r_grid[i] > r_grid[i - 1])) {
      throw PreconditionError("radial profile grid must be strictly increasing");
    }
  }
  const int n = srule.dim;
  std::vector<double> x(n);
  std::vector<ShellAverage> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) {
    double avg = 0.0;
    for (std::size_t j = 0; j < srule.size(); ++j) {
      const auto dir = srule.node(j);
      for (int c = 0; c < n; ++c) x[c] = r * dir[c];
      const double v = g(x);
      require_finite(v, "integrand", x);
      avg += srule.weights[j] * v;
    }
    out.push_back({r, avg});
  }
  return out;
}

double polar_density_constant(int n) {
  if (n < 2) throw PreconditionError("polar density needs n >= 2");
  return std::exp(std::lgamma(0.5 * n) - std::lgamma(0.5 * (n - 1))) / std::sqrt(kPi);
}

PolarRule make_polar_rule(int n, std::span<const double> breaks, int points) {
  PolarRule rule;
  rule.dim = n;
  const double cn = polar_density_constant(n);
  const LineRule ref = gauss_legendre(points);
  LineRule raw;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) append_mapped(raw, ref, breaks[i], breaks[i + 1]);
  rule.theta = raw.x;
  rule.weights.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    rule.weights[i] = cn * std::pow(std::sin(raw.x[i]), n - 2) * raw.w[i];
  }
  return rule;
}

PolarRule make_polar_rule(int n, double h, int points) {
  const auto breaks = geometric_breaks(0.0, kPi, h);
  return make_polar_rule(n, breaks, points);
}

AzimuthRule make_azimuth_rule(int n, int points) {
  AzimuthRule rule;
  rule.dim = n;
  if (n < 2) throw PreconditionError("azimuth rule needs n >= 2");
  if (n == 2) {
    rule.xi = {1.0, -1.0};
    rule.one_minus_xi = {0.0, 2.0};
    rule.weights = {0.5, 0.5};
    return rule;
  }
  if (points < 1) throw PreconditionError("azimuth rule needs at least one node");
  if (n == 3) {
    for (int j = 0; j < points; ++j) {
      const double phi = (j + 0.5) * kPi / points;
      const double sh = std::sin(0.5 * phi);
      rule.xi.push_back(std::cos(phi));
      rule.one_minus_xi.push_back(2.0 * sh * sh);
      rule.weights.push_back(1.0 / points);
    }
    return rule;
  }
  const LineRule g = gauss_gegenbauer(points, 0.5 * (n - 4));
  rule.xi = g.x;
  rule.weights = g.w;
  for (double x : g.x) rule.one_minus_xi.push_back(1.0 - x);
  return rule;
}

double direction_gap(double theta_x, double theta_y, double one_minus_xi) {
  const double sh = std::sin(0.5 * (theta_x - theta_y));
  return 2.0 * sh * sh + std::sin(theta_x) * std::sin(theta_y) * one_minus_xi;
}

double sphere_area(int k) {
  return 2.0 * std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k);
}

HalfSpaceRule make_halfspace_rule(int n, double lateral_extent, double s_min, double s_max,
                                  int points, double core) {
  if (n < 1) throw PreconditionError("half-space rules need boundary dimension n >= 1");
  if (!(s_min > 0.0 && s_max > s_min)) {
    throw PreconditionError("height window needs 0 < s_min < s_max");
  }
  if (!(lateral_extent > 0.0) || !(core > 0.0)) {
    throw PreconditionError("lateral extent and core scale must be positive");
  }
  HalfSpaceRule rule;
  rule.n = n;
  rule.lateral_extent = lateral_extent;
  rule.s_min = s_min;
  rule.s_max = s_max;
  const LineRule ref = gauss_legendre(points);

  std::vector<double> outer{0.0};
  double edge = std::min(core, lateral_extent);
  outer.push_back(edge);
  while (edge < lateral_extent) {
    edge = std::min(2.0 * edge, lateral_extent);
    outer.push_back(edge);
  }
  for (std::size_t i = outer.size() - 1; i > 0; --i) append_mapped(rule.lateral, ref, -outer[i], -outer[i - 1]);
  for (std::size_t i = 0; i + 1 < outer.size(); ++i) {
    append_mapped(rule.lateral, ref, outer[i], outer[i + 1]);
    append_mapped(rule.radial, ref, outer[i], outer[i + 1]);
  }

  std::vector<double> heights{s_min};
  const double mid = std::clamp(core, s_min, s_max);
  double h = s_min;
  while (2.0 * h < mid) {
    h *= 2.0;
    heights.push_back(h);
  }
  if (mid > heights.back()) heights.push_back(mid);
  h = mid;
  while (h < s_max) {
    h = std::min(2.0 * h, s_max);
    heights.push_back(h);
  }
  for (std::size_t i = 0; i + 1 < heights.size(); ++i) append_mapped(rule.height, ref, heights[i], heights[i + 1]);
  return rule;
}

namespace {

struct TailTracker {
  double decay;
  double r0;
  double amplitude = 0.0;

  void observe(double norm, double value) {
    if (norm >= 0.5 * r0) amplitude = std::max(amplitude, std::abs(value) * std::pow(norm, decay));
  }

  double far_bound(int n) const {
    return amplitude * 0.5 * sphere_area(n + 1) * std::pow(r0, n + 1 - decay) / (decay - n - 1);
  }
};

void check_decay(int n, double decay) {
  if (!(decay > n + 1)) {
    throw PreconditionError("declared decay exponent must exceed n + 1 for the tail to be integrable");
  }
}

}  // namespace

HalfSpaceIntegral integrate_halfspace(const HalfSpaceField& g, const HalfSpaceRule& rule,
                                      double decay_exponent) {
  const int n = rule.n;
  check_decay(n, decay_exponent);
  TailTracker tail{decay_exponent, std::min(rule.lateral_extent, rule.s_max)};
  const std::size_t m = rule.lateral.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> y(n);
  std::vector<double> at(n + 1);
  double sum = 0.0;
  double strip = 0.0;
  for (;;) {
    double wy = 1.0;
    double y2 = 0.0;
    for (int c = 0; c < n; ++c) {
      y[c] = rule.lateral.x[idx[c]];
      wy *= rule.lateral.w[idx[c]];
      y2 += y[c] * y[c];
    }
    double line = 0.0;
    for (std::size_t k = 0; k < rule.height.size(); ++k) {
      const double s = rule.height.x[k];
      const double v = g(y, s);
      if (!std::isfinite(v)) {
        std::copy(y.begin(), y.end(), at.begin());
        at[n] = s;
        require_finite(v, "integrand", at);
      }
      line += rule.height.w[k] * v;
      tail.observe(std::sqrt(y2 + s * s), v);
    }
    sum += wy * line;
    strip += wy * std::abs(g(y, rule.s_min));
    int c = 0;
    while (c < n && ++idx[c] == m) idx[c++] = 0;
    if (c == n) break;
  }
  return {sum, tail.far_bound(n) + 2.0 * rule.s_min * strip};
}

HalfSpaceIntegral integrate_halfspace_radial(const std::function<double(double, double)>& g,
                                             const HalfSpaceRule& rule, double decay_exponent) {
  const int n = rule.n;
  check_decay(n, decay_exponent);
  TailTracker tail{decay_exponent, std::min(rule.lateral_extent, rule.s_max)};
  const double area = sphere_area(n);
  double sum = 0.0;
  double strip = 0.0;
  for (std::size_t i = 0; i < rule.radial.size(); ++i) {
    const double rho = rule.radial.x[i];
    const double jac = area * std::pow(rho, n - 1) * rule.radial.w[i];
    double line = 0.0;
    for (std::size_t k = 0; k < rule.height.size(); ++k) {
      const double s = rule.height.x[k];
      const double v = g(rho, s);
      if (!std::isfinite(v)) {
        const double where[2] = {rho, s};
        require_finite(v, "integrand", where);
      }
      line += rule.height.w[k] * v;
      tail.observe(std::hypot(rho, s), v);
    }
    sum += jac * line;
    strip += jac * std::abs(g(rho, rule.s_min));
  }
  return {sum, tail.far_bound(n) + 2.0 * rule.s_min * strip};
}

}  // namespace bergman
