#include "bergman/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "bergman/errors.hpp"
#include "bergman/parallel.hpp"
#include "bergman/zonal.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double one_minus_cos(double theta) {
  const double s = std::sin(0.5 * theta);
  return 2.0 * s * s;
}

double power_abs(double v, double p) {
  const double a = std::abs(v);
  if (p == 1.0) return a;
  if (p == 2.0) return a * a;
  return std::pow(a, p);
}

void require_domain(const HarmonicFn& f, Domain d, const char* what) {
  if (f.domain != d) throw PreconditionError(std::string(what) + " needs a " + to_string(d) + " function");
}

void require_symmetric_halfspace(const HarmonicFn& f) {
  if (!f.radial && f.n != 1) {
    throw PreconditionError("half-space integrals need a function radial in y or boundary dimension 1 (" + f.label + ")");
  }
}

// ---------------------------------------------------------------------------
// Ball: dyadic shells and angular rules

// Depth panel of shell k: [1/2, 1] for k = 0, [2^{-k-1}, 2^{-k}] otherwise.
double shell_lo(int k) { return std::ldexp(1.0, -k - 1); }
double shell_hi(int k) { return k == 0 ? 1.0 : std::ldexp(1.0, -k); }

void check_grid(const NormGrid& grid) {
  if (grid.shells < 6) throw PreconditionError("norm grids need at least 6 shells");
  if (grid.points < 2) throw PreconditionError("norm grids need at least 2 points per panel");
  if (grid.theta_panels < 1) throw PreconditionError("norm grids need at least one angular panel");
  if (!(grid.rel_tol > 0.0)) throw PreconditionError("norm grid tolerance must be positive");
}

AdaptiveOptions adaptive(const NormGrid& grid, double loosen = 1.0) {
  AdaptiveOptions o;
  o.rel_tol = grid.rel_tol * loosen;
  o.max_depth = 12;
  return o;
}

std::vector<double> dyadic_cutoffs(int count) {
  std::vector<double> c;
  for (int k = 1; k <= count; ++k) c.push_back(std::ldexp(1.0, -k));
  return c;
}

void add_sign_changes(std::vector<double>& breaks, const HarmonicFn& f, double r, double depth, double scale) {
  const auto scan = theta_scan(scale);
  const auto set = superlevel_intervals([&](double th) { return f.at(r, depth, th); }, scan);
  for (const auto& iv : set) {
    breaks.push_back(iv.lo);
    breaks.push_back(iv.hi);
  }
}

std::vector<double> shell_theta_breaks(const HarmonicFn& f, double r, double depth, const NormGrid& grid) {
  std::vector<double> b;
  for (int i = 0; i <= grid.theta_panels; ++i) b.push_back(kPi * i / grid.theta_panels);
  if (f.boundary_peak) add_refinement(b, 0.0, kPi, 0.0, 0.25 * depth);
  add_sign_changes(b, f, r, depth, f.boundary_peak ? depth : 0.0);
  return finalize_breaks(b, 0.0, kPi);
}

// Sphere mean of |f|^p at radius r; p = inf gives the max over nodes.
double shell_mean(const HarmonicFn& f, double r, double depth, double p, const NormGrid& grid,
                  const LineRule& ref, const SphereRule* fallback) {
  const bool sup = std::isinf(p);
  auto check = [&](double v) {
    if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
    return v;
  };
  if (f.zonal) {
    const auto breaks = shell_theta_breaks(f, r, depth, grid);
    if (sup) {
      const auto rule = make_polar_rule(f.n, breaks, grid.points);
      double m = 0.0;
      for (double th : rule.theta) m = std::max(m, std::abs(check(f.zonal(r, depth, th))));
      for (double th : breaks) m = std::max(m, std::abs(check(f.zonal(r, depth, th))));
      return m;
    }
    const double cn = polar_density_constant(f.n);
    auto g = [&](double th) {
      return cn * std::pow(std::sin(th), f.n - 2) * power_abs(check(f.zonal(r, depth, th)), p);
    };
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) acc += adaptive_gauss(g, breaks[i], breaks[i + 1], ref, adaptive(grid));
    return acc;
  }
  std::vector<double> x(f.n);
  double acc = 0.0;
  for (std::size_t i = 0; i < fallback->size(); ++i) {
    const auto u = fallback->node(i);
    for (int j = 0; j < f.n; ++j) x[j] = r * u[j];
    const double v = check(f.eval(x));
    acc = sup ? std::max(acc, std::abs(v)) : acc + fallback->weights[i] * power_abs(v, p);
  }
  return acc;
}

NormResult finish(std::vector<double> cutoffs, std::vector<double> values, double root) {
  NormResult res;
  res.profile = classify_profile(std::move(cutoffs), std::move(values));
  switch (res.profile.classification) {
    case Classification::finite:
      res.integral = res.profile.estimate;
      res.value = std::pow(res.integral, 1.0 / root);
      break;
    case Classification::divergent:
      res.divergent = true;
      res.integral = kInf;
      res.value = kInf;
      res.note = "divergent: " + res.profile.note;
      break;
    case Classification::inconclusive:
      res.integral = res.profile.values.back();
      res.value = std::pow(res.integral, 1.0 / root);
      res.note = "inconclusive: " + res.profile.note;
      break;
  }
  return res;
}

// Outer q-integral over shells of inner p-means, weighted by weight(r, depth).
NormResult ball_outer_radial(const HarmonicFn& f, double p, double q,
                             const std::function<double(double, double)>& weight, const NormGrid& grid) {
  check_grid(grid);
  const LineRule ref = gauss_legendre(grid.points);
  std::optional<SphereRule> fb;
  if (!f.zonal) fb = make_sphere_rule(f.n, std::max(16, 4 * grid.points));
  const auto per_shell = parallel_map<double>(grid.shells, [&](std::size_t k) {
    auto g = [&](double depth) {
      const double r = 1.0 - depth;
      const double m = shell_mean(f, r, depth, p, grid, ref, fb ? &*fb : nullptr);
      const double mq = std::isinf(p) ? power_abs(m, q) : (q == p ? m : std::pow(m, q / p));
      return f.n * std::pow(r, f.n - 1) * weight(r, depth) * mq;
    };
    const int kk = static_cast<int>(k);
    return adaptive_gauss(g, shell_lo(kk), shell_hi(kk), ref, adaptive(grid));
  });
  std::vector<double> values;
  double acc = 0.0;
  for (double s : per_shell) {
    acc += s;
    values.push_back(acc);
  }
  return finish(dyadic_cutoffs(grid.shells), values, q);
}

// Outer p-integral over directions of inner q-integrals along rays. Each
// ray splits its shell panels at sign changes of f so |f|^q stays smooth on
// every Gauss panel.
NormResult ball_outer_angular(const HarmonicFn& f, double p, double q,
                              const std::function<double(double, double)>& weight, const NormGrid& grid) {
  check_grid(grid);
  const LineRule ref = gauss_legendre(grid.points);
  const int K = grid.shells;
  // Shell contributions along the ray with value(depth).
  auto ray = [&](const std::function<double(double)>& value, std::span<double> row) {
    for (int k = 0; k < K; ++k) {
      const double lo = shell_lo(k), hi = shell_hi(k);
      std::vector<double> scan, b = {lo, hi};
      for (int i = 0; i <= 16; ++i) scan.push_back(lo + (hi - lo) * i / 16.0);
      for (const auto& iv : superlevel_intervals(value, scan)) {
        b.push_back(iv.lo);
        b.push_back(iv.hi);
      }
      const auto breaks = finalize_breaks(b, lo, hi);
      auto g = [&](double depth) {
        const double r = 1.0 - depth;
        const double v = value(depth);
        if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
        return f.n * std::pow(r, f.n - 1) * weight(r, depth) * power_abs(v, q);
      };
      row[k] = 0.0;
      for (std::size_t m = 0; m + 1 < breaks.size(); ++m) row[k] += adaptive_gauss(g, breaks[m], breaks[m + 1], ref, adaptive(grid));
    }
  };
  // Cumulative ray integrals raised to p/q.
  auto outer = [&](std::span<double> row) {
    double cum = 0.0;
    for (int k = 0; k < K; ++k) {
      cum += row[k];
      row[k] = p == q ? cum : std::pow(cum, p / q);
    }
  };
  std::vector<double> values(K, 0.0);
  if (f.zonal) {
    std::vector<double> b;
    for (int i = 0; i <= grid.theta_panels; ++i) b.push_back(kPi * i / grid.theta_panels);
    if (f.boundary_peak) add_refinement(b, 0.0, kPi, 0.0, std::ldexp(0.25, -K));
    for (double r : {0.5, 0.9, 0.99}) add_sign_changes(b, f, r, 1.0 - r, f.boundary_peak ? 1.0 - r : 0.0);
    const auto breaks = finalize_breaks(b, 0.0, kPi);
    const double cn = polar_density_constant(f.n);
    const auto parts = parallel_map<std::vector<double>>(breaks.size() - 1, [&](std::size_t i) {
      std::vector<double> acc(K, 0.0);
      auto g = [&](double th, std::span<double> out) {
        ray([&](double depth) { return f.zonal(1.0 - depth, depth, th); }, out);
        outer(out);
        const double w = cn * std::pow(std::sin(th), f.n - 2);
        for (double& v : out) v *= w;
      };
      adaptive_gauss(g, breaks[i], breaks[i + 1], ref, acc, adaptive(grid, 100.0));
      return acc;
    });
    for (const auto& part : parts) {
      for (int k = 0; k < K; ++k) values[k] += part[k];
    }
  } else {
    const auto sphere = make_sphere_rule(f.n, std::max(16, 4 * grid.points));
    const auto rows = parallel_map<std::vector<double>>(sphere.size(), [&](std::size_t j) {
      std::vector<double> row(K, 0.0);
      const auto u = sphere.node(j);
      std::vector<double> x(f.n);
      ray(
          [&](double depth) {
            for (int i = 0; i < f.n; ++i) x[i] = (1.0 - depth) * u[i];
            return f.eval(x);
          },
          row);
      outer(row);
      return row;
    });
    for (std::size_t j = 0; j < sphere.size(); ++j) {
      for (int k = 0; k < K; ++k) values[k] += sphere.weights[j] * rows[j][k];
    }
  }
  return finish(dyadic_cutoffs(K), values, p);
}

// ---------------------------------------------------------------------------
// Half-space: dyadic cells in |y| and s; box k is |y| <= 2^k, s in [2^-k, 2^k].

struct AxisNode {
  double x;
  double w;
  int level;   // first box containing the node, 1-based
};

int halfspace_levels(const NormGrid& grid) { return std::max(6, grid.shells / 2); }

std::vector<AxisNode> lateral_nodes(const HarmonicFn& f, int levels, int points) {
  const LineRule ref = gauss_legendre(points);
  std::vector<AxisNode> out;
  auto panel = [&](double a, double b, int level) {
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double rho = 0.5 * (a + b) + 0.5 * (b - a) * ref.x[i];
      const double w = 0.5 * (b - a) * ref.w[i];
      if (f.radial) {
        out.push_back({rho, w * sphere_area(f.n) * std::pow(rho, f.n - 1), level});
      } else {
        out.push_back({rho, w, level});
        out.push_back({-rho, w, level});
      }
    }
  };
  panel(0.0, std::ldexp(1.0, -levels), 1);
  for (int j = -levels; j < levels; ++j) panel(std::ldexp(1.0, j), std::ldexp(1.0, j + 1), std::max(1, j + 1));
  return out;
}

std::vector<AxisNode> height_nodes(int levels, int points) {
  const LineRule ref = gauss_legendre(points);
  std::vector<AxisNode> out;
  for (int j = -levels; j < levels; ++j) {
    const double a = std::ldexp(1.0, j), b = std::ldexp(1.0, j + 1);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      out.push_back({0.5 * (a + b) + 0.5 * (b - a) * ref.x[i], 0.5 * (b - a) * ref.w[i], std::max(-j, j + 1)});
    }
  }
  return out;
}

double halfspace_value(const HarmonicFn& f, double y, double s) {
  const double v = f.radial ? f.radial(std::abs(y), s) : f.at_radial(y, s);
  if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
  return v;
}

// B-type (outer over s) when outer_height, F-type (outer over y) otherwise.
NormResult halfspace_mixed(const HarmonicFn& f, double p, double q, const std::function<double(double)>& weight,
                           bool outer_height, const NormGrid& grid) {
  require_symmetric_halfspace(f);
  const int levels = halfspace_levels(grid);
  const auto ys = lateral_nodes(f, levels, grid.points);
  const auto ss = height_nodes(levels, grid.points);
  std::vector<double> values(levels, 0.0);
  if (outer_height) {
    const auto rows = parallel_map<std::vector<double>>(ss.size(), [&](std::size_t i) {
      std::vector<double> cum(levels, 0.0);
      for (const auto& y : ys) cum[y.level - 1] += y.w * power_abs(halfspace_value(f, y.x, ss[i].x), p);
      for (int k = 1; k < levels; ++k) cum[k] += cum[k - 1];
      return cum;
    });
    for (std::size_t i = 0; i < ss.size(); ++i) {
      const double ws = ss[i].w * weight(ss[i].x);
      for (int k = ss[i].level - 1; k < levels; ++k) {
        values[k] += ws * (p == q ? rows[i][k] : std::pow(rows[i][k], q / p));
      }
    }
    return finish(dyadic_cutoffs(levels), values, q);
  }
  const auto rows = parallel_map<std::vector<double>>(ys.size(), [&](std::size_t i) {
    std::vector<double> cum(levels, 0.0);
    for (const auto& s : ss) cum[s.level - 1] += s.w * weight(s.x) * power_abs(halfspace_value(f, ys[i].x, s.x), q);
    for (int k = 1; k < levels; ++k) cum[k] += cum[k - 1];
    return cum;
  });
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (int k = ys[i].level - 1; k < levels; ++k) {
      values[k] += ys[i].w * (p == q ? rows[i][k] : std::pow(rows[i][k], p / q));
    }
  }
  return finish(dyadic_cutoffs(levels), values, p);
}

void check_exponent(double p, const char* name) {
  if (!(p > 0.0)) throw PreconditionError(std::string(name) + " must be positive");
}

void check_finite_exponent(double p, const char* name) {
  check_exponent(p, name);
  if (std::isinf(p)) throw PreconditionError(std::string(name) + " = inf is a sup norm; use ainf_norm");
}

// ---------------------------------------------------------------------------
// Sup norms

struct SupCandidate {
  double value = -1.0;
  double a = 0.0;   // ball: depth; half-space: y
  double b = 0.0;   // ball: theta; half-space: s
};

std::vector<double> depth_nodes_of_level(int j, int per_level) {
  std::vector<double> d;
  if (j == 0) {
    for (int i = 0; i <= 8; ++i) d.push_back(1.0 - i / 16.0);
    return d;
  }
  for (int i = 0; i < per_level; ++i) d.push_back(std::ldexp(std::exp2(-static_cast<double>(i) / per_level), -j));
  return d;
}

std::vector<double> sup_thetas(const HarmonicFn& f, double depth, const SupGrid& grid) {
  std::vector<double> th;
  for (int i = 0; i <= grid.theta_uniform; ++i) th.push_back(kPi * i / grid.theta_uniform);
  if (f.boundary_peak) {
    for (double s = depth / 16.0; s < kPi; s *= std::sqrt(2.0)) th.push_back(s);
  }
  return th;
}

SupResult ball_sup(const HarmonicFn& f, double t, const SupGrid& grid) {
  const int levels = grid.levels;
  std::optional<SphereRule> sphere;
  if (!f.zonal) sphere = make_sphere_rule(f.n, 2 * grid.per_level + 24);
  auto weighted = [&](double depth, double theta) {
    const double r = 1.0 - depth;
    const double v = f.at(r, depth, theta);
    if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
    return std::abs(v) * boundary_weight(grid.convention, r, depth, t);
  };
  auto weighted_cart = [&](double depth, std::size_t node) {
    const double r = 1.0 - depth;
    std::vector<double> x(f.n);
    const auto u = sphere->node(node);
    for (int i = 0; i < f.n; ++i) x[i] = r * u[i];
    const double v = f.eval(x);
    if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
    return std::abs(v) * boundary_weight(grid.convention, r, depth, t);
  };
  const auto best = parallel_map<SupCandidate>(levels + 1, [&](std::size_t j) {
    SupCandidate c;
    for (double d : depth_nodes_of_level(static_cast<int>(j), grid.per_level)) {
      if (f.zonal) {
        for (double th : sup_thetas(f, d, grid)) {
          const double v = weighted(d, th);
          if (v > c.value) c = {v, d, th};
        }
      } else {
        for (std::size_t i = 0; i < sphere->size(); ++i) {
          const double v = weighted_cart(d, i);
          if (v > c.value) c = {v, d, static_cast<double>(i)};
        }
      }
    }
    return c;
  });
  std::vector<double> cutoffs, values;
  SupCandidate top;
  for (int j = 0; j <= levels; ++j) {
    if (best[j].value > top.value) top = best[j];
    cutoffs.push_back(std::ldexp(1.0, -j));
    values.push_back(top.value);
  }
  SupResult res;
  res.profile = classify_profile(cutoffs, values);
  if (f.zonal) {
    double hd = 1.0 / grid.per_level;   // log2 units
    double ht = std::min(kPi / grid.theta_uniform, 0.25 * std::max(top.b, top.a));
    for (int round = 0; round < grid.refinements; ++round) {
      const SupCandidate center = top;
      for (int i = -2; i <= 2; ++i) {
        for (int k = -2; k <= 2; ++k) {
          const double d = std::min(1.0, center.a * std::exp2(0.5 * i * hd));
          const double th = std::clamp(center.b + 0.5 * k * ht, 0.0, kPi);
          const double v = weighted(d, th);
          if (v > top.value) top = {v, d, th};
        }
      }
      hd *= 0.5;
      ht *= 0.5;
    }
    res.witness = f.ball_point(1.0 - top.a, top.b);
  } else {
    const auto u = sphere->node(static_cast<std::size_t>(top.b));
    for (int i = 0; i < f.n; ++i) res.witness.push_back((1.0 - top.a) * u[i]);
  }
  res.value = top.value;
  res.unbounded = res.profile.classification == Classification::divergent;
  if (res.unbounded) res.note = "weighted modulus still growing at the finest level";
  if (res.profile.classification == Classification::inconclusive) res.note = "inconclusive: " + res.profile.note;
  return res;
}

SupResult halfspace_sup(const HarmonicFn& f, double t, const SupGrid& grid) {
  require_symmetric_halfspace(f);
  const int levels = std::max(6, grid.levels / 2);
  std::vector<AxisNode> ys, ss;
  ys.push_back({0.0, 0.0, 1});
  for (int j = -levels; j < levels; ++j) {
    for (int i = 0; i < grid.per_level; ++i) {
      const double x = std::ldexp(std::exp2(static_cast<double>(i) / grid.per_level), j);
      ys.push_back({x, 0.0, std::max(1, j + 1)});
      if (!f.radial) ys.push_back({-x, 0.0, std::max(1, j + 1)});
      ss.push_back({x, 0.0, std::max(-j, j + 1)});
    }
  }
  auto weighted = [&](double y, double s) { return std::abs(halfspace_value(f, y, s)) * std::pow(s, t); };
  // best[k]: best node first included in box k + 1
  const auto rows = parallel_map<std::vector<SupCandidate>>(ss.size(), [&](std::size_t i) {
    std::vector<SupCandidate> row(levels);
    for (const auto& y : ys) {
      const int level = std::max(y.level, ss[i].level);
      const double v = weighted(y.x, ss[i].x);
      if (v > row[level - 1].value) row[level - 1] = {v, y.x, ss[i].x};
    }
    return row;
  });
  std::vector<SupCandidate> best(levels);
  for (const auto& row : rows) {
    for (int k = 0; k < levels; ++k) {
      if (row[k].value > best[k].value) best[k] = row[k];
    }
  }
  std::vector<double> cutoffs, values;
  SupCandidate top;
  for (int k = 0; k < levels; ++k) {
    if (best[k].value > top.value) top = best[k];
    cutoffs.push_back(std::ldexp(1.0, -(k + 1)));
    values.push_back(std::max(0.0, top.value));
  }
  SupResult res;
  res.profile = classify_profile(cutoffs, values);
  double hy = 0.5 * std::max(std::abs(top.a), top.b) / grid.per_level;
  double hs = 1.0 / grid.per_level;
  for (int round = 0; round < grid.refinements; ++round) {
    const SupCandidate center = top;
    for (int i = -2; i <= 2; ++i) {
      for (int k = -2; k <= 2; ++k) {
        double y = center.a + 0.5 * i * hy;
        if (f.radial) y = std::abs(y);
        const double s = center.b * std::exp2(0.5 * k * hs);
        const double v = weighted(y, s);
        if (v > top.value) top = {v, y, s};
      }
    }
    hy *= 0.5;
    hs *= 0.5;
  }
  res.value = top.value;
  res.witness.assign(f.n + 1, 0.0);
  res.witness[0] = top.a;
  res.witness[f.n] = top.b;
  res.unbounded = res.profile.classification == Classification::divergent;
  if (res.unbounded) res.note = "weighted modulus still growing on the largest box";
  if (res.profile.classification == Classification::inconclusive) res.note = "inconclusive: " + res.profile.note;
  return res;
}

std::string join_labels(const std::vector<HarmonicFn>& fs) {
  std::string s;
  for (const auto& f : fs) s += (s.empty() ? "" : ", ") + f.label;
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------

const char* to_string(WeightConvention c) {
  return c == WeightConvention::one_minus_r ? "(1-|x|)^t" : "(1-|x|^2)^t";
}

double boundary_weight(WeightConvention c, double r, double depth, double t) {
  if (t == 0.0) return 1.0;
  const double base = c == WeightConvention::one_minus_r ? depth : depth * (1.0 + r);
  return std::pow(base, t);
}

double HarmonicFn::at(double r, double depth, double theta) const {
  if (zonal) return zonal(r, depth, theta);
  return eval(ball_point(r, theta));
}

double HarmonicFn::at_radial(double rho, double s) const {
  if (radial) return radial(std::abs(rho), s);
  std::vector<double> z(n + 1, 0.0);
  z[0] = rho;
  z[n] = s;
  return eval(z);
}

std::vector<double> HarmonicFn::ball_point(double r, double theta) const {
  std::vector<double> x(n, 0.0);
  x[axis] = r * std::cos(theta);
  x[(axis + 1) % n] = r * std::sin(theta);
  return x;
}

HarmonicFn HarmonicFn::scaled(double a) const {
  HarmonicFn g = *this;
  g.label = label + "*" + std::to_string(a);
  g.eval = [e = eval, a](std::span<const double> x) { return a * e(x); };
  if (zonal) g.zonal = [z = zonal, a](double r, double d, double th) { return a * z(r, d, th); };
  if (radial) g.radial = [q = radial, a](double rho, double s) { return a * q(rho, s); };
  return g;
}

std::vector<HarmonicFn> gallery(int n_ball, int n_half) {
  if (n_ball < 2) throw PreconditionError("ball gallery needs n >= 2");
  if (n_half < 1) throw PreconditionError("half-space gallery needs n >= 1");
  std::vector<HarmonicFn> out;
  const int n = n_ball;
  auto norm = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
  };

  HarmonicFn one;
  one.domain = Domain::ball;
  one.n = n;
  one.label = "one";
  one.eval = [](std::span<const double>) { return 1.0; };
  one.zonal = [](double, double, double) { return 1.0; };
  one.growth_exponent = 0.0;
  one.bounded = true;
  out.push_back(one);

  for (int axis : {0, 1}) {
    HarmonicFn c = one;
    c.label = axis == 0 ? "x1" : "x2";
    c.axis = axis;
    c.eval = [axis](std::span<const double> x) { return x[axis]; };
    c.zonal = [](double r, double, double th) { return r * std::cos(th); };
    out.push_back(c);
  }

  auto table = std::make_shared<ZonalTable>(n, 4);
  for (int k = 1; k <= 4; ++k) {
    HarmonicFn s = one;
    s.label = "solid_k" + std::to_string(k);
    s.zonal = [table, k](double r, double, double th) { return std::pow(r, k) * zonal(k, std::cos(th), *table); };
    s.eval = [table, k, norm](std::span<const double> x) {
      const double r = norm(x);
      if (r == 0.0) return 0.0;
      return std::pow(r, k) * zonal(k, std::clamp(x[0] / r, -1.0, 1.0), *table);
    };
    out.push_back(s);
  }

  HarmonicFn pe = one;
  pe.label = "poisson_e1";
  pe.zonal = [n](double r, double d, double th) { return poisson_ball_zonal(n, r, d, one_minus_cos(th)); };
  pe.eval = [n](std::span<const double> x) {
    std::vector<double> e(n, 0.0);
    e[0] = 1.0;
    return poisson_ball(BallPoint::from_cartesian(x), e);
  };
  pe.growth_exponent = n - 1.0;
  pe.boundary_peak = true;
  pe.bounded = false;
  out.push_back(pe);

  auto kernel = std::make_shared<BallKernel>(n, 1.0);
  HarmonicFn qb = one;
  qb.label = "qbeta_0.9e1";
  qb.zonal = [kernel](double r, double, double th) {
    const double u = 0.9 * r;
    return (*kernel)(u, 1.0 - u, one_minus_cos(th));
  };
  qb.eval = [kernel, n](std::span<const double> x) {
    std::vector<double> e(n, 0.0);
    e[0] = 1.0;
    return (*kernel)(BallPoint::from_cartesian(x), BallPoint::polar(0.9, e));
  };
  out.push_back(qb);

  const int m = n_half;
  HarmonicFn ph;
  ph.domain = Domain::halfspace;
  ph.n = m;
  ph.label = "poisson_hs";
  ph.radial = [m](double rho, double s) {
    const double h = s + 1.0;
    return poisson_halfspace_constant(m) * h / std::pow(rho * rho + h * h, 0.5 * (m + 1));
  };
  ph.eval = [m](std::span<const double> z) { return poisson_halfspace(z.first(m), z[m] + 1.0); };
  ph.growth_exponent = static_cast<double>(m);
  ph.bounded = true;
  out.push_back(ph);

  auto hk = std::make_shared<HalfSpaceKernel>(m, 0);
  HarmonicFn qm = ph;
  qm.label = "qm_w0";
  qm.radial = [hk](double rho, double s) { return (*hk)(rho * rho, s + 1.0); };
  qm.eval = [hk, m](std::span<const double> z) {
    double X = 0.0;
    for (int i = 0; i < m; ++i) X += z[i] * z[i];
    return (*hk)(X, z[m] + 1.0);
  };
  qm.growth_exponent = m + 1.0;
  out.push_back(qm);
  return out;
}

HarmonicFn gallery_function(const std::string& label, int n_ball, int n_half) {
  auto all = gallery(n_ball, n_half);
  for (auto& f : all) {
    if (f.label == label) return f;
  }
  throw PreconditionError("unknown gallery function '" + label + "'; known: " + join_labels(all));
}

double harmonicity_defect(const HarmonicFn& f, std::span<const std::vector<double>> points, double h) {
  const int dim = f.domain == Domain::ball ? f.n : f.n + 1;
  double worst = 0.0;
  for (const auto& x : points) {
    if (static_cast<int>(x.size()) != dim) throw PreconditionError("point has the wrong dimension");
    double dist;
    if (f.domain == Domain::ball) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      dist = 1.0 - std::sqrt(r2);
    } else {
      dist = x[f.n];
    }
    if (!(dist > h)) throw PreconditionError("stencil leaves the domain");
    const double f0 = f.eval(x);
    double mag = std::abs(f0), lap = 0.0;
    std::vector<double> y = x;
    for (int i = 0; i < dim; ++i) {
      y[i] = x[i] + h;
      const double fp = f.eval(y);
      y[i] = x[i] - h;
      const double fm = f.eval(y);
      y[i] = x[i];
      mag = std::max({mag, std::abs(fp), std::abs(fm)});
      lap += (fp - 2.0 * f0 + fm) / (h * h);
      // local magnitude: also sample half way to the boundary
      for (double sgn : {-0.5, 0.5}) {
        y[i] = x[i] + sgn * dist;
        mag = std::max(mag, std::abs(f.eval(y)));
      }
      y[i] = x[i];
    }
    if (mag > 0.0) worst = std::max(worst, std::abs(lap) * dist * dist / mag);
  }
  return worst;
}

// ---------------------------------------------------------------------------

SWeight SWeight::power(double a, double q_v, double domain_max) {
  std::ostringstream name;
  name << "u^" << a;
  return measured(name.str(), [a](double u) { return std::pow(u, a); }, q_v, domain_max);
}

SWeight SWeight::log_power(double a, double b, double c, double q_v) {
  if (!(c >= std::numbers::e - 1e-12)) throw PreconditionError("log weight needs c >= e");
  std::ostringstream name;
  name << "u^" << a << "*ln(" << c << "/u)^" << b;
  return measured(name.str(), [a, b, c](double u) { return std::pow(u, a) * std::pow(std::log(c / u), b); }, q_v,
                  1.0);
}

SWeight SWeight::measured(std::string name, std::function<double(double)> v, double q_v, double domain_max) {
  if (!(q_v > 0.0 && q_v < 1.0)) throw PreconditionError("q_v must lie in (0, 1)");
  SWeight w;
  w.name = std::move(name);
  w.v = std::move(v);
  w.q_v = q_v;
  w.domain_max = domain_max;
  std::vector<double> rs;
  if (std::isinf(domain_max)) {
    for (int j = -400; j <= 400; ++j) rs.push_back(std::exp2(j / 8.0));
  } else {
    for (int j = 0; j <= 400; ++j) rs.push_back(domain_max * std::exp2(-j / 8.0));
  }
  double lo = kInf, hi = 0.0;
  for (double r : rs) {
    const double vr = w.v(r);
    if (!(vr > 0.0) || !std::isfinite(vr)) throw PreconditionError("weight " + w.name + " is not positive and finite");
    for (int i = 0; i < 16; ++i) {
      const double lambda = q_v + (1.0 - q_v) * i / 16.0;
      const double ratio = w.v(lambda * r) / vr;
      if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw PreconditionError("weight " + w.name + " is not positive and finite");
      }
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
  }
  if (!(lo > 0.0 && lo <= 1.0)) throw PreconditionError("weight " + w.name + " has m_v outside (0, 1]");
  w.m_v = lo;
  w.M_v = hi;
  w.alpha_v = std::log(lo) / std::log(q_v);
  return w;
}

double weight_threshold(const SWeight& w, double p) {
  check_exponent(p, "p");
  return std::isinf(p) ? 0.0 : (w.alpha_v + 1.0) / p;
}

// ---------------------------------------------------------------------------

const char* to_string(Scale s) {
  switch (s) {
    case Scale::Mp: return "Mp";
    case Scale::Ap: return "Ap";
    case Scale::Ainf: return "Ainf";
    case Scale::Bpq: return "Bpq";
    case Scale::Fpq: return "Fpq";
    case Scale::hpv: return "hpv";
    case Scale::Hpv: return "Hpv";
  }
  return "?";
}

void NormSpec::validate() const {
  if (!(p > 0.0)) throw PreconditionError("p must lie in (0, inf]");
  const bool mixed = scale == Scale::Bpq || scale == Scale::Fpq;
  if (mixed != q.has_value()) throw PreconditionError("q is required exactly for the mixed scales");
  if (q && !(*q > 0.0)) throw PreconditionError("q must lie in (0, inf]");
  switch (scale) {
    case Scale::Ap:
    case Scale::Bpq:
    case Scale::Fpq:
      if (!(alpha > -1.0)) throw PreconditionError("alpha must exceed -1");
      break;
    case Scale::Ainf:
      if (!(alpha > 0.0)) throw PreconditionError("the sup scale needs alpha > 0");
      break;
    case Scale::hpv:
    case Scale::Hpv:
      if (!weight) throw PreconditionError("weighted scales need a weight");
      break;
    case Scale::Mp:
      if (!radius || !(*radius >= 0.0 && *radius < 1.0)) throw PreconditionError("M_p needs a radius in [0, 1)");
      break;
  }
}

double mp_norm(const HarmonicFn& f, double p, double r, const SphereRule& rule) {
  require_domain(f, Domain::ball, "M_p");
  check_exponent(p, "p");
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("M_p needs 0 <= r < 1");
  if (rule.dim != f.n) throw PreconditionError("sphere rule dimension differs from the function's");
  std::vector<double> x(f.n);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const auto u = rule.node(i);
    for (int j = 0; j < f.n; ++j) x[j] = r * u[j];
    const double v = f.eval(x);
    if (!std::isfinite(v)) throw EvaluationError("non-finite value of " + f.label);
    if (std::isinf(p)) {
      acc = std::max(acc, std::abs(v));
    } else {
      acc += rule.weights[i] * power_abs(v, p);
    }
  }
  return std::isinf(p) ? acc : std::pow(acc, 1.0 / p);
}

NormResult bergman_norm(const HarmonicFn& f, double p, double alpha, const NormGrid& grid) {
  return mixed_norm(f, Scale::Bpq, p, p, alpha, grid);
}

NormResult mixed_norm(const HarmonicFn& f, Scale scale, double p, double q, double alpha, const NormGrid& grid) {
  if (scale != Scale::Bpq && scale != Scale::Fpq) throw PreconditionError("mixed_norm needs scale Bpq or Fpq");
  check_exponent(p, "p");
  check_finite_exponent(q, "q");
  if (!(alpha > -1.0)) throw PreconditionError("alpha must exceed -1");
  if (f.domain == Domain::ball) {
    auto w = [&](double r, double d) { return boundary_weight(grid.convention, r, d, alpha); };
    if (scale == Scale::Bpq) return ball_outer_radial(f, p, q, w, grid);
    check_finite_exponent(p, "p");
    return ball_outer_angular(f, p, q, w, grid);
  }
  check_finite_exponent(p, "p");
  auto w = [alpha](double s) { return alpha == 0.0 ? 1.0 : std::pow(s, alpha); };
  return halfspace_mixed(f, p, q, w, scale == Scale::Bpq, grid);
}

NormResult weighted_norm(const HarmonicFn& f, double p, const SWeight& wt, const NormGrid& grid) {
  check_finite_exponent(p, "p");
  if (f.domain == Domain::ball) {
    auto w = [&](double, double d) { return wt(d); };
    return ball_outer_radial(f, p, p, w, grid);
  }
  if (std::isfinite(wt.domain_max)) throw PreconditionError("half-space weights must be defined on (0, inf)");
  return halfspace_mixed(f, p, p, [&](double s) { return wt(s); }, true, grid);
}

NormResult evaluate_norm(const HarmonicFn& f, const NormSpec& spec, const NormGrid& grid) {
  spec.validate();
  switch (spec.scale) {
    case Scale::Mp: {
      NormResult res;
      const auto rule = make_sphere_rule(f.n, std::max(16, 4 * grid.points));
      res.value = mp_norm(f, spec.p, *spec.radius, rule);
      res.integral = std::isinf(spec.p) ? res.value : std::pow(res.value, spec.p);
      res.profile.classification = Classification::finite;
      return res;
    }
    case Scale::Ap: {
      if (std::isinf(spec.p)) throw PreconditionError("A^p with p = inf is the sup scale Ainf");
      return bergman_norm(f, spec.p, spec.alpha, grid);
    }
    case Scale::Ainf: {
      SupGrid sg;
      sg.convention = grid.convention;
      const auto sup = ainf_norm(f, spec.alpha, sg);
      NormResult res;
      res.value = sup.unbounded ? kInf : sup.value;
      res.integral = res.value;
      res.divergent = sup.unbounded;
      res.profile = sup.profile;
      res.note = sup.note;
      return res;
    }
    case Scale::Bpq:
    case Scale::Fpq:
      return mixed_norm(f, spec.scale, spec.p, *spec.q, spec.alpha, grid);
    case Scale::hpv:
      require_domain(f, Domain::ball, "h^p_v");
      return weighted_norm(f, spec.p, *spec.weight, grid);
    case Scale::Hpv:
      require_domain(f, Domain::halfspace, "H^p_v");
      return weighted_norm(f, spec.p, *spec.weight, grid);
  }
  throw PreconditionError("unknown scale");
}

SupGrid SupGrid::refined() const {
  SupGrid g = *this;
  g.levels += 8;
  g.per_level *= 2;
  g.theta_uniform *= 2;
  g.refinements += 1;
  return g;
}

SupResult ainf_norm(const HarmonicFn& f, double t, const SupGrid& grid) {
  if (!std::isfinite(t)) throw PreconditionError("sup weight exponent must be finite");
  if (grid.levels < 6 || grid.per_level < 1 || grid.theta_uniform < 2) throw PreconditionError("sup grid too coarse");
  if (f.domain == Domain::ball) {
    if (!(t > 0.0)) throw PreconditionError("sup norms on the ball need t > 0");
    return ball_sup(f, t, grid);
  }
  return halfspace_sup(f, t, grid);
}

EmbeddingResult embedding_check(const HarmonicFn& f, double p, double alpha, const NormGrid& norm_grid,
                                const SupGrid& sup_grid) {
  EmbeddingResult res;
  const double t = (alpha + f.n + (f.domain == Domain::ball ? 0.0 : 1.0)) / p;
  const auto norm = bergman_norm(f, p, alpha, norm_grid);
  if (norm.profile.classification != Classification::finite) {
    res.applicable = false;
    res.note = "norm not finite: " + norm.note;
    return res;
  }
  if (norm.value == 0.0) {
    res.note = "zero function";
    return res;
  }
  const auto sup = ainf_norm(f, t, sup_grid);
  NormGrid fine = norm_grid;
  fine.shells += 8;
  fine.points += 4;
  const auto norm2 = bergman_norm(f, p, alpha, fine);
  const auto sup2 = ainf_norm(f, t, sup_grid.refined());
  res.ratio = sup.unbounded ? kInf : sup.value / norm.value;
  res.refined_ratio = sup2.unbounded ? kInf : sup2.value / norm2.value;
  res.drift = std::abs(res.refined_ratio - res.ratio) / res.ratio;
  res.witness = sup.witness;
  if (f.domain == Domain::ball) {
    double r2 = 0.0;
    for (double v : res.witness) r2 += v * v;
    res.interior_witness = 1.0 - std::sqrt(r2) >= 1e-3;
  } else {
    res.interior_witness = res.witness[f.n] >= 1e-3 && res.witness[f.n] <= 1e3;
  }
  if (sup.unbounded) res.note = "weighted sup unbounded";
  return res;
}

}  // namespace bergman
