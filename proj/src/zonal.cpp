#include "bergman/zonal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bergman/errors.hpp"
#include "bergman/quadrature.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kAzimuthLevels = 48;

}  // namespace

void add_refinement(std::vector<double>& breaks, double a, double b, double c, double h) {
  if (!(b > a) || !(h > 0.0) || !std::isfinite(c)) return;
  if (c < a) {
    h = std::max(h, a - c);
    c = a;
  } else if (c > b) {
    h = std::max(h, c - b);
    c = b;
  }
  breaks.push_back(c);
  for (double s = h; c + s < b; s *= 2.0) breaks.push_back(c + s);
  for (double s = h; c - s > a; s *= 2.0) breaks.push_back(c - s);
}

std::vector<double> finalize_breaks(std::vector<double> breaks, double a, double b) {
  breaks.push_back(a);
  breaks.push_back(b);
  for (double& x : breaks) x = std::clamp(x, a, b);
  std::sort(breaks.begin(), breaks.end());
  const double tol = 1e-15 * std::max(1.0, std::abs(b - a));
  std::vector<double> out;
  out.reserve(breaks.size());
  for (double x : breaks) {
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  }
  if (out.size() >= 2) out.back() = b;
  return out;
}

std::vector<Interval> superlevel_intervals(const std::function<double(double)>& g,
                                           std::span<const double> scan, int bisections) {
  std::vector<Interval> out;
  if (scan.empty()) return out;
  auto crossing = [&](double lo, double hi, bool lo_inside) {
    for (int it = 0; it < bisections; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((g(mid) >= 0.0) == lo_inside) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  };
  bool inside = g(scan[0]) >= 0.0;
  double start = scan[0];
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const bool now = g(scan[i]) >= 0.0;
    if (now == inside) continue;
    const double x = crossing(scan[i - 1], scan[i], inside);
    if (inside) {
      out.push_back({start, x});
    } else {
      start = x;
    }
    inside = now;
  }
  if (inside) out.push_back({start, scan.back()});
  return out;
}

std::vector<Interval> complement(const std::vector<Interval>& set, double a, double b) {
  std::vector<Interval> out;
  double cur = a;
  for (const auto& iv : set) {
    if (iv.lo > cur) out.push_back({cur, std::min(iv.lo, b)});
    cur = std::max(cur, iv.hi);
    if (cur >= b) break;
  }
  if (cur < b) out.push_back({cur, b});
  return out;
}

std::vector<double> theta_scan(double scale, int uniform) {
  std::vector<double> pts;
  for (int i = 0; i <= uniform; ++i) pts.push_back(kPi * i / uniform);
  if (scale > 0.0) {
    for (double s = scale / 8.0; s < kPi / uniform; s *= 1.5) pts.push_back(s);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

AzimuthTable::AzimuthTable(int d, int points) : d_(d) {
  if (d < 2) throw PreconditionError("azimuth rules need d >= 2");
  if (points < 1) throw PreconditionError("azimuth rules need at least one point");
  if (d != 3) {
    const auto rule = make_azimuth_rule(d, points);
    levels_.push_back({rule.one_minus_xi, rule.weights});
    return;
  }
  const LineRule ref = gauss_legendre(points);
  for (int j = 0; j < kAzimuthLevels; ++j) {
    std::vector<double> breaks;
    if (j == 0) {
      breaks = {0.0, 0.5 * kPi, kPi};
    } else {
      breaks = geometric_breaks(0.0, kPi, std::ldexp(1.0, -j), 128);
    }
    LineRule phi;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) append_mapped(phi, ref, breaks[i], breaks[i + 1]);
    AzimuthNodes nodes;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const double s = std::sin(0.5 * phi.x[i]);
      nodes.one_minus_xi.push_back(2.0 * s * s);
      nodes.weights.push_back(phi.w[i] / kPi);
    }
    levels_.push_back(std::move(nodes));
  }
}

const AzimuthNodes& AzimuthTable::select(double width) const {
  if (levels_.size() == 1 || !(width < 1.0)) return levels_[0];
  // Smallest panel about half the peak width.
  const int j = static_cast<int>(std::ceil(std::log2(2.0 / std::max(width, 1e-300))));
  return levels_[std::clamp(j, 1, kAzimuthLevels - 1)];
}

}  // namespace bergman
