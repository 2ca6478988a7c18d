#include "bergman/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bergman/errors.hpp"
#include "bergman/zonal.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;

double relative_change(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

double radical_inverse(unsigned base, std::uint64_t i) {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void finish(LemmaReport& rep, bool hard_ok, const std::string& hard_note = {}) {
  if (!std::isfinite(rep.max_ratio)) {
    rep.verdict = Verdict::fail;
    rep.notes += (rep.notes.empty() ? "" : "; ") + std::string("empirical constant is not finite");
  } else if (!hard_ok) {
    rep.verdict = Verdict::fail;
    if (!hard_note.empty()) rep.notes += (rep.notes.empty() ? "" : "; ") + hard_note;
  } else if (!(rep.grid_refinement_drift <= rep.drift_threshold)) {
    rep.verdict = Verdict::inconclusive;
    rep.notes += (rep.notes.empty() ? "" : "; ") + std::string("INCONCLUSIVE: refinement drift ") +
                 format_double(rep.grid_refinement_drift) + " exceeds " + format_double(rep.drift_threshold);
  } else {
    rep.verdict = Verdict::pass;
  }
  rep.pass = rep.verdict == Verdict::pass;
}

double max_value(const std::vector<RatioSample>& s) {
  double m = 0.0;
  for (const auto& x : s) {
    if (!std::isfinite(x.value)) return HUGE_VAL;
    m = std::max(m, x.value);
  }
  return m;
}

double spread(const std::vector<RatioSample>& s) {
  if (s.empty()) return 0.0;
  double lo = HUGE_VAL, hi = 0.0;
  for (const auto& x : s) {
    lo = std::min(lo, x.value);
    hi = std::max(hi, x.value);
  }
  return hi > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
}

// int_S |g(1 - cos theta)|^e dsigma over the normalized sphere for g
// depending on the angle to a fixed axis, peaked at theta = 0 on scale
// `width`. Panels are split at the sign changes of g.
double axial_sphere_mean(int n, const std::function<double(double)>& g, double e, double width, int points) {
  auto at = [&](double th) {
    const double sh = std::sin(0.5 * th);
    return g(2.0 * sh * sh);
  };
  std::vector<double> breaks;
  for (int k = 0; k <= 8; ++k) breaks.push_back(k * kPi / 8.0);
  add_refinement(breaks, 0.0, kPi, 0.0, 0.5 * width);
  const auto scan = theta_scan(width);
  for (const auto& iv : superlevel_intervals(at, scan)) {
    breaks.push_back(iv.lo);
    breaks.push_back(iv.hi);
  }
  const auto b = finalize_breaks(std::move(breaks), 0.0, kPi);
  const PolarRule rule = make_polar_rule(n, b, points);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * std::pow(std::abs(at(rule.theta[i])), e);
  return sum;
}

// Orthonormal basis of the complement of the unit vector a.
std::vector<std::vector<double>> complement_basis(const std::vector<double>& a) {
  const int n = static_cast<int>(a.size());
  std::vector<std::vector<double>> basis{a};
  for (int i = 0; i < n && static_cast<int>(basis.size()) < n; ++i) {
    std::vector<double> v(n, 0.0);
    v[i] = 1.0;
    for (const auto& b : basis) {
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += v[c] * b[c];
      for (int c = 0; c < n; ++c) v[c] -= dot * b[c];
    }
    double len = 0.0;
    for (double c : v) len += c * c;
    len = std::sqrt(len);
    if (len < 1e-8) continue;
    for (double& c : v) c /= len;
    basis.push_back(std::move(v));
  }
  basis.erase(basis.begin());
  return basis;
}

// Unit vectors of S^{n-2} inside the complement of an axis, with weights.
struct OrthogonalRule {
  std::vector<std::vector<double>> eta;
  std::vector<double> weights;
};

OrthogonalRule orthogonal_rule(const std::vector<double>& axis, int resolution) {
  const int n = static_cast<int>(axis.size());
  const auto basis = complement_basis(axis);
  OrthogonalRule rule;
  if (n == 2) {
    rule.eta = {basis[0], {-basis[0][0], -basis[0][1]}};
    rule.weights = {0.5, 0.5};
    return rule;
  }
  if (n == 3) {
    for (int k = 0; k < resolution; ++k) {
      const double phi = 2.0 * kPi * k / resolution;
      std::vector<double> v(3);
      for (int c = 0; c < 3; ++c) v[c] = std::cos(phi) * basis[0][c] + std::sin(phi) * basis[1][c];
      rule.eta.push_back(std::move(v));
      rule.weights.push_back(1.0 / resolution);
    }
    return rule;
  }
  const SphereRule s = make_sphere_rule(n - 1, resolution);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto node = s.node(i);
    std::vector<double> v(n, 0.0);
    for (int j = 0; j < n - 1; ++j) {
      for (int c = 0; c < n; ++c) v[c] += node[j] * basis[j][c];
    }
    rule.eta.push_back(std::move(v));
    rule.weights.push_back(s.weights[i]);
  }
  return rule;
}

}  // namespace

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::inconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

const char* to_string(KernelBound b) {
  switch (b) {
    case KernelBound::pointwise: return "pointwise";
    case KernelBound::sphere_mean: return "sphere_mean";
    case KernelBound::sphere_power: return "sphere_power";
    case KernelBound::halfspace: return "halfspace";
  }
  return "?";
}

double LemmaReport::measure(const std::string& name) const {
  for (const auto& [k, v] : measures) {
    if (k == name) return v;
  }
  throw std::out_of_range("report " + lemma_id + " has no measure " + name);
}

// ---------------------------------------------------------------------------

double radial_power_integral(double alpha, double lambda, double rho, int points) {
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("radial integral needs 0 <= rho < 1");
  // u = 1 - r: int_0^1 u^alpha (1 - rho + rho u)^-lambda du on panels
  // [2^-(j+1), 2^-j]; below 2^-J the second factor is frozen at u = 0.
  constexpr int J = 60;
  const LineRule ref = gauss_legendre(points);
  const double c = 1.0 - rho;
  double sum = 0.0;
  for (int j = 0; j < J; ++j) {
    const double a = std::ldexp(1.0, -j - 1), b = std::ldexp(1.0, -j);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double panel = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double u = mid + half * ref.x[i];
      panel += ref.w[i] * std::pow(u, alpha) * std::pow(c + rho * u, -lambda);
    }
    sum += half * panel;
  }
  sum += std::pow(std::ldexp(1.0, -J), alpha + 1.0) / (alpha + 1.0) * std::pow(c, -lambda);
  return sum;
}

LemmaReport verify_rro(double alpha, double lambda, std::span<const double> rho_grid) {
  if (!(alpha > -1.0)) throw PreconditionError("radial integral estimate requires alpha > -1");
  if (!(lambda > alpha + 1.0)) throw PreconditionError("radial integral estimate requires lambda > alpha + 1");
  if (rho_grid.empty()) throw PreconditionError("radial integral check needs a nonempty rho grid");
  LemmaReport rep;
  rep.lemma_id = "rro";
  rep.parameter_point = {{"alpha", alpha}, {"lambda", lambda}};
  std::vector<RatioSample> fine;
  for (double rho : rho_grid) {
    const double scale = std::pow(1.0 - rho, lambda - alpha - 1.0);
    rep.samples.push_back({{rho}, radial_power_integral(alpha, lambda, rho, 16) * scale});
    fine.push_back({{rho}, radial_power_integral(alpha, lambda, rho, 24) * scale});
  }
  rep.max_ratio = max_value(rep.samples);
  rep.grid_refinement_drift = relative_change(rep.max_ratio, max_value(fine));
  bool ok = true;
  std::string note;
  if (alpha == 0.0 && lambda == 2.0) {
    double err = 0.0;
    for (const auto& s : rep.samples) err = std::max(err, std::abs(s.value - 1.0));
    rep.measures.push_back({"exact_case_error", err});
    ok = err <= 1e-9;
    if (!ok) note = "ratio differs from the exact value 1 by " + format_double(err);
  }
  finish(rep, ok, note);
  return rep;
}

// ---------------------------------------------------------------------------

PowerIntegralGrid PowerIntegralGrid::refined() const {
  PowerIntegralGrid g = *this;
  g.points = points + points / 2;
  g.depth_levels = depth_levels + 16;
  g.ratio = 1.0 + 0.6 * (ratio - 1.0);
  return g;
}

double qbeta_power_integral(int n, double beta, double delta, double gamma, double r,
                            const PowerIntegralGrid& grid) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("power integral needs 0 <= r < 1");
  const BallKernel kernel(n, beta);
  const double e = gamma / (n + beta);
  const LineRule ref = gauss_legendre(grid.points);
  auto slice = [&](double d) {
    const double rho = 1.0 - d;
    const double u = r * rho;
    const double omu = (1.0 - r) + r * d;
    return axial_sphere_mean(n, [&](double omt) { return kernel(u, omu, omt); }, e, omu, grid.points);
  };
  double sum = 0.0;
  for (int j = 0; j < grid.depth_levels; ++j) {
    const double a = std::ldexp(1.0, -j - 1), b = std::ldexp(1.0, -j);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double d = mid + half * ref.x[i];
      sum += half * ref.w[i] * n * std::pow(1.0 - d, n - 1) * std::pow(d, delta) * slice(d);
    }
  }
  const double last = std::ldexp(1.0, -grid.depth_levels);
  sum += n * slice(last) * std::pow(last, delta + 1.0) / (delta + 1.0);
  if (!std::isfinite(sum)) throw EvaluationError("non-finite kernel power integral");
  return sum;
}

LemmaReport verify_qbeta(int n, double delta, double gamma, double beta, std::span<const double> r_grid,
                         const PowerIntegralGrid& grid) {
  if (!(delta > -1.0)) throw PreconditionError("kernel power estimate requires delta > -1");
  if (!(gamma > n + delta)) throw PreconditionError("kernel power estimate requires gamma > n + delta");
  if (!(beta > 0.0)) throw PreconditionError("kernel power estimate requires beta > 0");
  if (r_grid.empty()) throw PreconditionError("kernel power check needs a nonempty r grid");
  LemmaReport rep;
  rep.lemma_id = "qbeta";
  rep.parameter_point = {{"n", static_cast<double>(n)}, {"delta", delta}, {"gamma", gamma}, {"beta", beta}};
  const PowerIntegralGrid fine_grid = grid.refined();
  std::vector<RatioSample> fine;
  for (double r : r_grid) {
    const double scale = std::pow(1.0 - r, gamma - n - delta);
    rep.samples.push_back({{r}, qbeta_power_integral(n, beta, delta, gamma, r, grid) * scale});
    fine.push_back({{r}, qbeta_power_integral(n, beta, delta, gamma, r, fine_grid) * scale});
  }
  rep.max_ratio = max_value(rep.samples);
  rep.grid_refinement_drift = relative_change(rep.max_ratio, max_value(fine));
  const double approach = spread(rep.samples);
  rep.measures.push_back({"approach_drift", approach});
  finish(rep, approach <= 0.2, "ratio spread " + format_double(approach) + " along the boundary approach exceeds 0.2");
  return rep;
}

HalfSpacePowerIntegral qm_power_integral(int n, int m, double delta, double gamma, double t,
                                         const PowerIntegralGrid& grid) {
  if (!(t > 0.0)) throw DomainError("power integral needs t > 0");
  if (!(grid.ratio > 1.0)) throw PreconditionError("panel ratio must exceed 1");
  const HalfSpaceKernel kernel(n, m);
  const double e = gamma / (n + m + 1);
  const double area = sphere_area(n);
  const LineRule ref = gauss_legendre(grid.points);

  // Q_m(rho, T) = T^{-(n+m+1)} q(rho / T): the sign changes in rho sit at
  // fixed multiples of T.
  std::vector<double> zeros;
  {
    std::vector<double> scan;
    for (int i = 0; i <= 400; ++i) scan.push_back(64.0 * i / 400.0);
    for (const auto& iv : superlevel_intervals([&](double v) { return kernel(v * v, 1.0); }, scan)) {
      if (iv.lo > 0.0) zeros.push_back(iv.lo);
      if (iv.hi < 64.0) zeros.push_back(iv.hi);
    }
  }

  const double log_ratio = std::log(grid.ratio);
  auto geometric = [&](double lo, double hi) {
    std::vector<double> b{lo, hi};
    for (int j = static_cast<int>(std::ceil(std::log(lo) / log_ratio)); j <= std::floor(std::log(hi) / log_ratio); ++j) {
      b.push_back(std::exp(j * log_ratio));
    }
    return b;
  };
  const double lo = grid.s_min * t, hi = grid.extent * t;
  std::vector<double> rho_base = geometric(lo, hi);
  rho_base.push_back(0.0);

  // Slice integral over y at height s and its far-field bound.
  auto slice = [&](double s, double* tail) {
    const double T = t + s;
    std::vector<double> b = rho_base;
    for (double z : zeros) b.push_back(z * T);
    const auto br = finalize_breaks(std::move(b), 0.0, hi);
    double acc = 0.0;
    for (std::size_t p = 0; p + 1 < br.size(); ++p) {
      const double half = 0.5 * (br[p + 1] - br[p]), mid = 0.5 * (br[p + 1] + br[p]);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const double rho = mid + half * ref.x[i];
        acc += half * ref.w[i] * area * std::pow(rho, n - 1) * std::pow(std::abs(kernel(rho * rho, T)), e);
      }
    }
    const double edge = std::pow(std::abs(kernel(hi * hi, T)), e);
    *tail = 2.0 * area * edge * std::pow(hi, n) / (gamma - n);
    return acc;
  };

  const auto sb = finalize_breaks(geometric(lo, hi), lo, hi);
  HalfSpacePowerIntegral out;
  double lateral_tail = 0.0;
  for (std::size_t p = 0; p + 1 < sb.size(); ++p) {
    const double half = 0.5 * (sb[p + 1] - sb[p]), mid = 0.5 * (sb[p + 1] + sb[p]);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double s = mid + half * ref.x[i];
      double tail = 0.0;
      const double w = half * ref.w[i] * std::pow(s, delta);
      out.value += w * slice(s, &tail);
      lateral_tail += w * tail;
    }
  }
  double tail_lo = 0.0, tail_hi = 0.0;
  const double j_lo = slice(lo, &tail_lo), j_hi = slice(hi, &tail_hi);
  out.tail_bound = lateral_tail + 2.0 * (j_lo + tail_lo) * std::pow(lo, delta + 1.0) / (delta + 1.0) +
                   2.0 * (j_hi + tail_hi) * std::pow(hi, delta + 1.0) / (gamma - n - 1.0 - delta);
  if (!std::isfinite(out.value)) throw EvaluationError("non-finite half-space power integral");
  return out;
}

LemmaReport verify_qm(int n, double delta, double gamma, int m, std::span<const double> t_grid,
                      const PowerIntegralGrid& grid) {
  if (!(delta > -1.0)) throw PreconditionError("half-space kernel power estimate requires delta > -1");
  if (!(gamma > n + 1 + delta)) {
    throw PreconditionError("half-space kernel power estimate requires gamma > n + 1 + delta");
  }
  if (m < 0) throw PreconditionError("half-space kernel order needs m >= 0");
  if (t_grid.empty()) throw PreconditionError("half-space power check needs a nonempty t grid");
  LemmaReport rep;
  rep.lemma_id = "qm";
  rep.parameter_point = {{"n", static_cast<double>(n)}, {"delta", delta}, {"gamma", gamma},
                         {"m", static_cast<double>(m)}};
  const double power = gamma - n - 1.0 - delta;
  const double law = std::pow(2.0, -power);
  const PowerIntegralGrid fine_grid = grid.refined();
  std::vector<RatioSample> fine;
  double scaling = 0.0, tail = 0.0;
  for (double t : t_grid) {
    const auto a = qm_power_integral(n, m, delta, gamma, t, grid);
    const auto b = qm_power_integral(n, m, delta, gamma, 2.0 * t, grid);
    rep.samples.push_back({{t}, a.value * std::pow(t, power)});
    fine.push_back({{t}, qm_power_integral(n, m, delta, gamma, t, fine_grid).value * std::pow(t, power)});
    scaling = std::max(scaling, std::abs(b.value / a.value / law - 1.0));
    tail = std::max(tail, a.tail_bound / a.value);
  }
  rep.max_ratio = max_value(rep.samples);
  rep.grid_refinement_drift = relative_change(rep.max_ratio, max_value(fine));
  const double approach = spread(rep.samples);
  rep.measures = {{"scaling_error", scaling}, {"approach_drift", approach}, {"relative_tail_bound", tail}};
  const bool ok = scaling <= 1e-4 && approach <= 0.2;
  finish(rep, ok,
         "scaling error " + format_double(scaling) + " (limit 1e-4), spread " + format_double(approach) +
             " (limit 0.2)");
  return rep;
}

// ---------------------------------------------------------------------------

LemmaReport verify_kernel_bounds(const KernelSpec& spec, KernelBound part, int sample_count) {
  if (sample_count < 1) throw PreconditionError("kernel bound check needs sample_count >= 1");
  const int n = spec.n;
  if ((part == KernelBound::halfspace) != (spec.domain == Domain::halfspace)) {
    throw PreconditionError("kernel bound part does not match the kernel domain");
  }
  LemmaReport rep;
  rep.lemma_id = "kernel_bound";
  std::function<double(std::uint64_t)> ratio;
  std::string where;
  std::optional<BallKernel> ball;
  std::optional<HalfSpaceKernel> half;
  double depth_floor = 1e-5;

  switch (part) {
    case KernelBound::pointwise:
    case KernelBound::sphere_mean: {
      if (part == KernelBound::pointwise && !(spec.beta > 0.0)) {
        throw PreconditionError("pointwise kernel estimate requires beta > 0");
      }
      ball.emplace(n, spec.beta);
      if (!ball->closed_form()) {
        depth_floor = 0.05;
        rep.notes = "series kernel: boundary approach stops at depth 0.05";
      }
      rep.parameter_point = {{"n", static_cast<double>(n)}, {"beta", spec.beta}};
      break;
    }
    case KernelBound::sphere_power:
      if (!(spec.beta > n - 1.0)) throw PreconditionError("sphere power estimate requires beta > n - 1");
      rep.parameter_point = {{"n", static_cast<double>(n)}, {"beta", spec.beta}};
      break;
    case KernelBound::halfspace:
      half.emplace(n, spec.m);
      rep.parameter_point = {{"n", static_cast<double>(n)}, {"m", static_cast<double>(spec.m)}};
      break;
  }
  rep.parameter_point.push_back({"samples", static_cast<double>(sample_count)});
  const double decades = -std::log10(depth_floor);

  // Each sample is reduced to the invariants the ratio depends on.
  std::function<std::pair<std::vector<double>, double>(std::uint64_t)> sample;
  switch (part) {
    case KernelBound::pointwise:
      sample = [&, decades](std::uint64_t i) {
        const double d = std::pow(10.0, -decades * radical_inverse(2, i));
        const double gap = 2.0 * std::pow(10.0, -10.0 * radical_inverse(3, i));
        const double u = 1.0 - d;
        const double dist2 = d * d + 2.0 * u * gap;   // |rho x - y'|^2
        const double q = (*ball)(u, d, gap);
        return std::pair{std::vector<double>{u, gap}, std::abs(q) * std::pow(dist2, 0.5 * (n + spec.beta))};
      };
      break;
    case KernelBound::sphere_mean:
      sample = [&, decades](std::uint64_t i) {
        const double d = std::pow(10.0, -decades * radical_inverse(2, i));
        const double u = 1.0 - d;
        const double mean =
            axial_sphere_mean(n, [&](double omt) { return (*ball)(u, d, omt); }, 1.0, d, 12);
        return std::pair{std::vector<double>{u}, mean * std::pow(d, 1.0 + spec.beta)};
      };
      break;
    case KernelBound::sphere_power:
      sample = [&, decades](std::uint64_t i) {
        const double d = std::pow(10.0, -decades * radical_inverse(2, i));
        const double r = 1.0 - d;
        const double mean = axial_sphere_mean(
            n, [&](double omt) { return 1.0 / std::sqrt(d * d + 2.0 * r * omt); }, spec.beta, d, 12);
        return std::pair{std::vector<double>{r}, mean * std::pow(d, spec.beta - n + 1.0)};
      };
      break;
    case KernelBound::halfspace:
      sample = [&](std::uint64_t i) {
        // |x - y| / (s + t) = tan(pi h / 2); the ratio is dilation invariant.
        const double v = std::tan(0.5 * kPi * radical_inverse(2, i));
        const double q = (*half)(v * v, 1.0);
        return std::pair{std::vector<double>{v}, std::abs(q) * std::pow(v * v + 1.0, 0.5 * (n + spec.m + 1))};
      };
      break;
  }

  double coarse = 0.0;
  std::vector<double> witness;
  for (int i = 0; i < sample_count; ++i) {
    auto [at, value] = sample(static_cast<std::uint64_t>(i));
    if (!std::isfinite(value)) throw EvaluationError("non-finite kernel ratio");
    if (value > coarse) {
      coarse = value;
      witness = at;
    }
  }
  double fine = coarse;
  for (int i = sample_count; i < 4 * sample_count; ++i) {
    auto [at, value] = sample(static_cast<std::uint64_t>(i));
    if (!std::isfinite(value)) throw EvaluationError("non-finite kernel ratio");
    fine = std::max(fine, value);
  }
  rep.samples.push_back({witness, coarse});
  rep.max_ratio = coarse;
  rep.grid_refinement_drift = relative_change(coarse, fine);
  rep.measures.push_back({"refined_max_ratio", fine});
  if (part == KernelBound::halfspace) rep.measures.push_back({"aligned_value", std::abs((*half)(0.0, 1.0))});
  rep.notes += (rep.notes.empty() ? "" : "; ") + std::string("part ") + to_string(part);
  finish(rep, true);
  return rep;
}

// ---------------------------------------------------------------------------

LemmaReport verify_poisson_series(int n, double r, double t, int k_max, int block) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("Poisson series needs 0 <= r < 1");
  if (!(std::abs(t) <= 1.0)) throw DomainError("Poisson series needs |t| <= 1");
  if (block < 1 || k_max < 2 * block) throw PreconditionError("Poisson series check needs k_max >= 2 block >= 2");
  LemmaReport rep;
  rep.lemma_id = "poisson_series";
  rep.parameter_point = {{"n", static_cast<double>(n)}, {"r", r}, {"t", t}, {"k_max", static_cast<double>(k_max)}};
  const ZonalTable table(n, k_max);
  std::vector<double> z(static_cast<std::size_t>(k_max) + 1);
  table.evaluate(t, z);
  const double limit = poisson_ball_zonal(n, r, 1.0 - r, 1.0 - t);
  double partial = 0.0, power = 1.0;
  std::vector<double> errors;
  for (int k = 0; k <= k_max; ++k) {
    partial += power * z[k];
    power *= r;
    if (k > 0 && k % block == 0) {
      errors.push_back(std::abs(partial - limit));
      rep.samples.push_back({{static_cast<double>(k)}, errors.back()});
    }
  }
  const std::size_t b = errors.size();
  auto rate = [&](std::size_t i) { return std::pow(errors[i] / errors[i - 1], 1.0 / block); };
  const double last = rate(b - 1);
  const double previous = b >= 3 ? rate(b - 2) : last;
  rep.max_ratio = errors.back() / std::abs(limit);
  rep.grid_refinement_drift = relative_change(last, previous);
  rep.measures = {{"rate", last}, {"limit", limit}, {"partial_sum", partial}};
  const bool ok = std::abs(last - r) <= 0.05 && rep.max_ratio <= 1e-6;
  finish(rep, ok, "rate " + format_double(last) + " or final relative error " + format_double(rep.max_ratio) +
                      " outside the expected range");
  return rep;
}

// ---------------------------------------------------------------------------

Hypothesis Hypothesis::bergman(double p, double alpha) { return {p, alpha, std::nullopt}; }

Hypothesis Hypothesis::weighted(double p, SWeight v) { return {p, 0.0, std::move(v)}; }

RepresentationGrid RepresentationGrid::refined() const {
  RepresentationGrid g = *this;
  g.radial_refinement = radial_refinement + 2;
  g.radial_points = radial_points + radial_points / 2;
  g.theta_panels = 2 * theta_panels;
  g.theta_points = theta_points + theta_points / 2;
  g.azimuth_points = azimuth_points + azimuth_points / 2;
  g.peak_levels = peak_levels + 8;
  g.lateral_points = lateral_points + lateral_points / 2;
  g.extent = 4.0 * extent;
  g.s_min = 0.25 * s_min;
  return g;
}

double represent_ball(const HarmonicFn& f, double beta, std::span<const double> x, const RepresentationGrid& grid) {
  if (f.domain != Domain::ball) throw PreconditionError("ball representation needs a ball function");
  const int n = f.n;
  if (static_cast<int>(x.size()) != n) throw PreconditionError("point dimension differs from the function's");
  const BallPoint xp = BallPoint::from_cartesian(x);
  if (!(xp.r < 1.0)) throw DomainError("representation point must lie in the ball");
  const double r = xp.r;
  // A non-integer beta leaves (1 - rho^2)^beta singular at rho = 1.
  const bool deep = f.boundary_peak || beta != std::floor(beta);
  const RadialRule radial = make_radial_rule(deep ? grid.peak_levels : grid.radial_refinement, grid.radial_points);
  auto radial_weight = [&](std::size_t i) {
    const double rho = radial.nodes[i], d = radial.depths[i];
    return radial.weights[i] * std::pow(rho, n - 1) * std::pow(d * (1.0 + rho), beta);
  };
  auto theta_rule = [&](double d, double kernel_center, double kernel_width) {
    std::vector<double> b;
    for (int k = 0; k <= grid.theta_panels; ++k) b.push_back(k * kPi / grid.theta_panels);
    if (f.boundary_peak) add_refinement(b, 0.0, kPi, 0.0, 0.5 * d);
    add_refinement(b, 0.0, kPi, kernel_center, 0.5 * kernel_width);
    return make_polar_rule(n, finalize_breaks(std::move(b), 0.0, kPi), grid.theta_points);
  };
  double total = 0.0;

  if (f.symmetric()) {
    // Polar coordinates about the axis of f. The kernel averaged over the
    // rotations fixing the axis is 2 sum c_k u^k Z_k(cos theta_x) Z_k(cos theta) / d_k.
    std::vector<double> axis(n, 0.0);
    axis[f.axis] = 1.0;
    const double cos_x = std::clamp(std::inner_product(axis.begin(), axis.end(), xp.dir.begin(), 0.0), -1.0, 1.0);
    const double theta_x = std::acos(cos_x);
    int k_max = 8;
    if (r > 0.0) {
      // Terms fall like k^(beta + n) r^k; stop once that is below 1e-18.
      while (k_max < 20000 && (beta + n) * std::log(k_max) + k_max * std::log(r) > std::log(1e-18)) k_max += 8;
    } else {
      k_max = 0;
    }
    const ZonalTable table(n, std::max(k_max, 1));
    std::vector<double> zx(static_cast<std::size_t>(k_max) + 1), zy(zx.size()), coef(zx.size());
    table.evaluate(cos_x, zx);
    std::vector<double> ck(zx.size());
    ck[0] = std::exp(std::lgamma(beta + 1.0 + 0.5 * n) - std::lgamma(beta + 1.0) - std::lgamma(0.5 * n));
    for (int k = 1; k <= k_max; ++k) ck[k] = ck[k - 1] * (beta + k + 0.5 * n) / (k - 1 + 0.5 * n);
    for (std::size_t i = 0; i < radial.size(); ++i) {
      const double rho = radial.nodes[i], d = radial.depths[i];
      const double u = r * rho;
      double power = 1.0;
      for (int k = 0; k <= k_max; ++k) {
        coef[k] = 2.0 * ck[k] * power * zx[k] / table.dimension(k);
        power *= u;
      }
      const PolarRule rule = theta_rule(d, theta_x, (1.0 - r) + r * d);
      double inner = 0.0;
      for (std::size_t j = 0; j < rule.size(); ++j) {
        const double th = rule.theta[j];
        table.evaluate(std::cos(th), zy);
        double q = 0.0;
        for (int k = k_max; k >= 0; --k) q += coef[k] * zy[k];
        inner += rule.weights[j] * q * f.at(rho, d, th);
      }
      total += radial_weight(i) * inner;
    }
  } else {
    // Polar coordinates about x': the kernel depends on the polar angle only.
    const OrthogonalRule orth = orthogonal_rule(xp.dir, grid.azimuth_points);
    const BallKernel kernel(n, beta);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < radial.size(); ++i) {
      const double rho = radial.nodes[i], d = radial.depths[i];
      const double u = r * rho;
      const double omu = xp.depth() + r * d;
      const PolarRule rule = theta_rule(d, 0.0, omu);
      double inner = 0.0;
      for (std::size_t j = 0; j < rule.size(); ++j) {
        const double th = rule.theta[j];
        const double sh = std::sin(0.5 * th);
        const double q = kernel(u, omu, 2.0 * sh * sh);
        const double c = std::cos(th), s = std::sin(th);
        double avg = 0.0;
        for (std::size_t a = 0; a < orth.eta.size(); ++a) {
          for (int k = 0; k < n; ++k) y[k] = rho * (c * xp.dir[k] + s * orth.eta[a][k]);
          avg += orth.weights[a] * f(y);
        }
        inner += rule.weights[j] * q * avg;
      }
      total += radial_weight(i) * inner;
    }
  }
  if (!std::isfinite(total)) throw EvaluationError("non-finite reproduced value for " + f.label);
  return total;
}

HalfSpaceIntegral represent_halfspace(const HarmonicFn& f, int m, std::span<const double> z,
                                      const RepresentationGrid& grid) {
  if (f.domain != Domain::halfspace) throw PreconditionError("half-space representation needs a half-space function");
  const int n = f.n;
  if (static_cast<int>(z.size()) != n + 1) throw PreconditionError("point dimension differs from the function's");
  const double t = z[n];
  if (!(t > 0.0)) throw DomainError("representation point needs t > 0");
  const HalfSpaceKernel kernel(n, m);
  const double R = grid.extent;
  const LineRule ref = gauss_legendre(grid.lateral_points);

  // Lateral panels doubling away from every coordinate of z and from the
  // origin, where the gallery functions are centred; heights doubling from
  // s_min with extra breaks around t.
  std::vector<double> lb{-R, R};
  for (int i = 0; i < n; ++i) add_refinement(lb, -R, R, z[i], 0.5 * std::min(t, 1.0));
  add_refinement(lb, -R, R, 0.0, 0.5 * std::min(t, 1.0));
  const auto lateral = finalize_breaks(std::move(lb), -R, R);
  std::vector<double> hb = geometric_breaks(grid.s_min, R, grid.s_min, 256);
  add_refinement(hb, grid.s_min, R, t, 0.5 * t);
  const auto heights = finalize_breaks(std::move(hb), grid.s_min, R);

  HalfSpaceRule rule;
  rule.n = n;
  rule.lateral_extent = R;
  rule.s_min = grid.s_min;
  rule.s_max = R;
  for (std::size_t i = 0; i + 1 < lateral.size(); ++i) append_mapped(rule.lateral, ref, lateral[i], lateral[i + 1]);
  for (std::size_t i = 0; i + 1 < heights.size(); ++i) append_mapped(rule.height, ref, heights[i], heights[i + 1]);

  std::vector<double> w(n + 1);
  auto g = [&](std::span<const double> y, double s) {
    double X = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = z[i] - y[i];
      X += d * d;
      w[i] = y[i];
    }
    w[n] = s;
    return kernel(X, t + s) * f(w) * std::pow(s, m);
  };
  // |Q_m| s^m decays like |w|^{-(n+1)}; f like |w|^{-g}.
  const double decay = n + 1.0 + f.growth_exponent.value_or(0.0);
  return integrate_halfspace(g, rule, decay);
}

std::vector<std::vector<double>> default_representation_grid(Domain domain, int n) {
  std::vector<std::vector<double>> out;
  if (domain == Domain::ball) {
    out.push_back(std::vector<double>(n, 0.0));
    for (double r : {0.35, 0.7}) {
      for (int i = 0; i < n; ++i) {
        for (double sign : {1.0, -1.0}) {
          std::vector<double> x(n, 0.0);
          x[i] = sign * r;
          out.push_back(std::move(x));
        }
      }
      out.push_back(std::vector<double>(n, r / std::sqrt(static_cast<double>(n))));
    }
    return out;
  }
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    for (double t : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      std::vector<double> z(n + 1, 0.0);
      z[0] = x;
      z[n] = t;
      out.push_back(std::move(z));
    }
  }
  return out;
}

namespace {

void require_member(const HarmonicFn& f, const Hypothesis& h) {
  const NormGrid coarse{16, 8, 8, 1e-10, WeightConvention::one_minus_r_squared};
  NormResult res;
  std::string space;
  if (h.weight) {
    if (std::isinf(h.p)) {
      // Weighted sup membership is decided for power-like weights through
      // the growth exponent alpha_v.
      const auto sup = ainf_norm(f, h.weight->alpha_v);
      res.divergent = sup.unbounded;
      space = "the weighted sup space with v = " + h.weight->name;
    } else {
      res = weighted_norm(f, h.p, *h.weight, coarse);
      space = (f.domain == Domain::ball ? "h^p_v" : "H^p_v") + std::string(" with v = ") + h.weight->name +
              ", p = " + format_double(h.p);
    }
  } else {
    res = bergman_norm(f, h.p, h.alpha, coarse);
    space = "A^p_alpha with p = " + format_double(h.p) + ", alpha = " + format_double(h.alpha);
  }
  if (res.divergent || !std::isfinite(res.value)) {
    throw PreconditionError("f = " + f.label + " is not in " + space + " (the norm integral diverges)");
  }
}

}  // namespace

LemmaReport verify_representation(const HarmonicFn& f, const KernelSpec& spec, const Hypothesis& hypothesis,
                                  std::span<const std::vector<double>> x_grid, const RepresentationGrid& grid) {
  if (f.domain != spec.domain || f.n != spec.n) {
    throw PreconditionError("kernel and function disagree on the domain or dimension");
  }
  const double p = hypothesis.p;
  if (!(p > 0.0)) throw PreconditionError("representation requires p > 0");
  bool provisional = false;
  double order = 0.0;
  if (spec.domain == Domain::ball) {
    const double beta = spec.beta;
    order = beta;
    if (hypothesis.weight) {
      if (!(p >= 1.0)) throw PreconditionError("weighted representation requires p >= 1 or p = inf");
      const double s = weight_threshold(*hypothesis.weight, p);
      if (!(s > 0.0 || std::isinf(p))) throw PreconditionError("weighted representation requires s(v, p) > 0");
      if (!(beta > s)) {
        throw PreconditionError("weighted representation requires alpha > s(v, p) = (alpha_v + 1)/p = " +
                                format_double(s) + ", got alpha = " + format_double(beta));
      }
      provisional = std::isinf(p);
    } else {
      if (!(p >= 1.0) || std::isinf(p)) throw PreconditionError("ball representation requires 1 <= p < inf");
      if (!(beta >= 0.0)) throw PreconditionError("ball representation requires beta >= 0");
      if (!(hypothesis.alpha <= beta)) {
        throw PreconditionError("ball representation with Q_beta requires f in A^p_alpha with alpha <= beta");
      }
    }
  } else {
    const double m = spec.m;
    order = m;
    const double nn = spec.n;
    if (hypothesis.weight) {
      if (!(p > 1.0)) throw PreconditionError("weighted half-space representation requires 1 < p <= inf");
      const double m0 = weight_threshold(*hypothesis.weight, p) - 1.0;
      if (!(m > m0)) {
        throw PreconditionError("weighted half-space representation requires m > s(v, p) - 1 = " + format_double(m0));
      }
      provisional = std::isinf(p);
    } else {
      const double alpha = hypothesis.alpha;
      if (!(alpha > -1.0) || std::isinf(p)) {
        throw PreconditionError("half-space representation requires alpha > -1 and p < inf");
      }
      if (p <= 1.0) {
        const double bound = (alpha + nn + 1.0) / p - (nn + 1.0);
        if (!(m >= bound)) {
          throw PreconditionError("half-space representation with p <= 1 requires m >= (alpha + n + 1)/p - (n + 1) = " +
                                  format_double(bound));
        }
      } else if (!(m > (alpha + 1.0) / p - 1.0)) {
        throw PreconditionError("half-space representation with p > 1 requires m > (alpha + 1)/p - 1 = " +
                                format_double((alpha + 1.0) / p - 1.0));
      }
    }
  }
  require_member(f, hypothesis);

  const auto points = x_grid.empty() ? default_representation_grid(spec.domain, spec.n)
                                     : std::vector<std::vector<double>>(x_grid.begin(), x_grid.end());
  LemmaReport rep;
  rep.lemma_id = "representation";
  rep.parameter_point = {{"n", static_cast<double>(spec.n)},
                         {spec.domain == Domain::ball ? "beta" : "m", order},
                         {"p", p}};
  if (hypothesis.weight) {
    rep.parameter_point.push_back({"alpha_v", hypothesis.weight->alpha_v});
  } else {
    rep.parameter_point.push_back({"alpha", hypothesis.alpha});
  }
  const RepresentationGrid fine_grid = grid.refined();
  const double base = spec.domain == Domain::ball ? 1e-4 : 1e-3;
  double fine_max = 0.0, tail = 0.0;
  for (const auto& x : points) {
    const double fx = f(x);
    double coarse_err = 0.0, fine_err = 0.0;
    if (spec.domain == Domain::ball) {
      coarse_err = std::abs(represent_ball(f, spec.beta, x, grid) - fx) / (1.0 + std::abs(fx));
      fine_err = std::abs(represent_ball(f, spec.beta, x, fine_grid) - fx) / (1.0 + std::abs(fx));
    } else {
      const auto a = represent_halfspace(f, spec.m, x, grid);
      const auto b = represent_halfspace(f, spec.m, x, fine_grid);
      coarse_err = std::abs(a.value - fx) / (1.0 + std::abs(fx));
      fine_err = std::abs(b.value - fx) / (1.0 + std::abs(fx));
      tail = std::max(tail, a.tail_bound / (1.0 + std::abs(fx)));
    }
    rep.samples.push_back({x, coarse_err});
    fine_max = std::max(fine_max, fine_err);
  }
  rep.max_ratio = max_value(rep.samples);
  const double threshold = base + tail;
  // Errors sit near rounding level, so the drift is measured against the
  // pass threshold rather than against the error itself.
  rep.grid_refinement_drift = std::abs(fine_max - rep.max_ratio) / threshold;
  rep.measures = {{"threshold", threshold}, {"refined_max_error", fine_max}, {"relative_tail_bound", tail},
                  {"provisional", provisional ? 1.0 : 0.0}};
  if (provisional) rep.notes = "p = inf: provisional";
  rep.notes += (rep.notes.empty() ? "" : "; ") + std::string("f = ") + f.label;
  const bool ok = rep.max_ratio <= threshold && fine_max <= threshold;
  finish(rep, ok, "reproduction error " + format_double(std::max(rep.max_ratio, fine_max)) + " exceeds " +
                      format_double(threshold));
  return rep;
}

}  // namespace bergman
