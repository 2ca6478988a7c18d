#include "bergman/kernels.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bergman/errors.hpp"

namespace bergman {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kClosedFormMaxOrder = 40;

// Steps Z_0(t), Z_1(t), ... one degree at a time.
class ZonalStepper {
 public:
  ZonalStepper(int n, double t) : n_(n), t_(t), mu_(0.5 * (n - 2)) {}

  double next() {
    const int k = k_++;
    double c;
    if (k == 0) {
      c = 1.0;
    } else if (n_ == 2) {
      c = (k == 1) ? t_ : 2.0 * t_ * c1_ - c2_;
    } else {
      c = (k == 1) ? 2.0 * mu_ * t_
                   : (2.0 * t_ * (k + mu_ - 1.0) * c1_ - (k + 2.0 * mu_ - 2.0) * c2_) / k;
    }
    c2_ = c1_;
    c1_ = c;
    if (k == 0) return 1.0;
    return n_ == 2 ? 2.0 * c : (k + mu_) / mu_ * c;
  }

 private:
  int n_;
  double t_;
  double mu_;
  int k_ = 0;
  double c1_ = 0.0;  // C_{k-1}
  double c2_ = 0.0;  // C_{k-2}
};

double clamp_cosine(double t) {
  if (!(std::abs(t) <= 1.0 + 1e-12)) throw DomainError("zonal argument must lie in [-1, 1]");
  return std::clamp(t, -1.0, 1.0);
}

double negative_half_power(double a, int n) {
  // a^{-n/2}
  switch (n) {
    case 1: return 1.0 / std::sqrt(a);
    case 2: return 1.0 / a;
    case 3: return 1.0 / (a * std::sqrt(a));
    case 4: return 1.0 / (a * a);
    default: return std::pow(a, -0.5 * n);
  }
}

}  // namespace

const char* to_string(Domain d) { return d == Domain::ball ? "ball" : "halfspace"; }

KernelSpec KernelSpec::ball(int n, double beta) {
  if (n < 2) throw PreconditionError("ball kernels need n >= 2");
  if (!(beta >= 0.0)) throw PreconditionError("ball kernel parameter needs beta >= 0");
  return KernelSpec{Domain::ball, n, beta, 0};
}

KernelSpec KernelSpec::halfspace(int n, int m) {
  if (n < 1) throw PreconditionError("half-space kernels need n >= 1");
  if (m < 0) throw PreconditionError("half-space kernel order needs m >= 0");
  return KernelSpec{Domain::halfspace, n, 0.0, m};
}

ZonalTable::ZonalTable(int n, int k_max) : n_(n), k_max_(k_max) {
  if (n < 2) throw PreconditionError("zonal harmonics need n >= 2");
  if (k_max < 0) throw PreconditionError("zonal table needs k_max >= 0");
  dims_.resize(k_max + 1);
  evaluate(1.0, dims_);
}

double ZonalTable::dimension(int k) const {
  if (k < 0 || k > k_max_) throw PreconditionError("zonal degree exceeds the table's k_max");
  return dims_[k];
}

void ZonalTable::evaluate(double t, std::span<double> out) const {
  t = clamp_cosine(t);
  ZonalStepper step(n_, t);
  for (double& v : out) v = step.next();
}

double zonal(int k, double t, const ZonalTable& table) {
  if (k < 0 || k > table.k_max()) throw PreconditionError("zonal degree exceeds the table's k_max");
  t = clamp_cosine(t);
  ZonalStepper step(table.n(), t);
  double z = 0.0;
  for (int j = 0; j <= k; ++j) z = step.next();
  return z;
}

SeriesValue q_beta_series_at(int n, double beta, double u, double t, const SeriesTruncation& trunc) {
  if (n < 2) throw PreconditionError("ball kernels need n >= 2");
  if (!(beta >= 0.0)) throw PreconditionError("ball kernel parameter needs beta >= 0");
  if (!(u >= 0.0)) throw DomainError("r rho must be nonnegative");
  if (!(u < 1.0)) throw DivergentSeriesError("kernel series diverges for r rho >= 1");
  if (u > 0.999 && !trunc.allow_near_boundary) {
    throw DivergentSeriesError("r rho = " + std::to_string(u) +
                               " exceeds 0.999; enable allow_near_boundary to sum anyway");
  }
  if (trunc.k_max < 0) throw PreconditionError("k_max must be >= 0");
  t = clamp_cosine(t);

  const double half_n = 0.5 * n;
  double coeff = std::exp(std::lgamma(beta + 1.0 + half_n) - std::lgamma(beta + 1.0) -
                          std::lgamma(half_n));   // c_k u^k, starting at k = 0
  ZonalStepper z(n, t);
  ZonalStepper d(n, 1.0);
  SeriesValue out;
  d.next();
  for (int k = 0; k <= trunc.k_max; ++k) {
    out.value += 2.0 * coeff * z.next();
    out.terms = k + 1;
    // Next two majorant terms a_{k+1}, a_{k+2} with a_j = 2 c_j u^j d_j.
    const double c1 = coeff * u * (beta + 1.0 + k + half_n) / (k + half_n);
    const double d1 = d.next();
    const double c2 = c1 * u * (beta + 2.0 + k + half_n) / (k + 1.0 + half_n);
    ZonalStepper peek = d;
    const double d2 = peek.next();
    const double a1 = 2.0 * c1 * d1;
    const double a2 = 2.0 * c2 * d2;
    const double q = a1 > 0.0 ? a2 / a1 : 0.0;
    out.tail_bound = a1 == 0.0 ? 0.0 : (q < 1.0 ? a1 / (1.0 - q) : kInf);
    if (out.tail_bound <= 1e-17 * std::abs(out.value) || a1 == 0.0) break;
    coeff = c1;
  }
  return out;
}

SeriesValue q_beta_series(const BallPoint& x, const BallPoint& y, const KernelSpec& spec,
                          const SeriesTruncation& trunc) {
  if (spec.domain != Domain::ball) throw PreconditionError("q_beta_series needs a ball kernel spec");
  if (x.dim() != spec.n || y.dim() != spec.n) throw PreconditionError("point dimension differs from n");
  const double omt = direction_gap(x.dir, y.dir);
  return q_beta_series_at(spec.n, spec.beta, x.r * y.r, 1.0 - omt, trunc);
}

BallKernel::BallKernel(int n, double beta) : n_(n), beta_(beta) {
  if (n < 2) throw PreconditionError("ball kernels need n >= 2");
  if (!(beta >= 0.0)) throw PreconditionError("ball kernel parameter needs beta >= 0");
  if (beta == std::floor(beta) && beta <= kClosedFormMaxOrder) {
    order_ = static_cast<int>(beta);
    prefactor_ = 2.0 / std::tgamma(beta + 1.0);
  }
}

double BallKernel::operator()(double u, double omu, double omt) const {
  if (order_ < 0) {
    SeriesTruncation trunc;
    trunc.allow_near_boundary = true;
    trunc.k_max = 200000;
    return q_beta_series_at(n_, beta_, u, 1.0 - omt, trunc).value;
  }
  const int len = order_ + 2;  // Taylor coefficients 0..order+1
  std::array<double, kClosedFormMaxOrder + 2> g{};
  std::array<double, kClosedFormMaxOrder + 2> p{};
  const double a0 = omu * omu + 2.0 * u * omt;
  if (!(a0 > 0.0)) return kInf;
  const double a1 = 2.0 * (omt - omu);
  const double c = -0.5 * n_;
  g[0] = negative_half_power(a0, n_);
  for (int k = 1; k < len; ++k) {
    double acc = ((c + 1.0) - k) * a1 * g[k - 1];
    if (k >= 2) acc += (2.0 * (c + 1.0) - k) * g[k - 2];
    g[k] = acc / (k * a0);
  }
  const double b0 = omu * (1.0 + u);
  const double b1 = -2.0 * u;
  for (int k = 0; k < len; ++k) {
    double v = b0 * g[k];
    if (k >= 1) v += b1 * g[k - 1];
    if (k >= 2) v -= g[k - 2];
    p[k] = v;
  }
  const double half_n = 0.5 * n_;
  for (int j = 0; j <= order_; ++j) {
    const int top = len - 1 - j;
    for (int k = 0; k < top; ++k) p[k] = u * (k + 1) * p[k + 1] + (k + half_n + j) * p[k];
  }
  return prefactor_ * p[0];
}

double BallKernel::operator()(const BallPoint& x, const BallPoint& y) const {
  const double u = x.r * y.r;
  const double omu = (1.0 - y.r) + y.r * (1.0 - x.r);
  return (*this)(u, omu, direction_gap(x.dir, y.dir));
}

double direction_gap(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw PreconditionError("direction dimensions differ");
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return 0.5 * d2;
}

double poisson_ball_zonal(int n, double r, double depth, double omt) {
  const double denom = depth * depth + 2.0 * r * omt;
  if (!(denom > 0.0)) return kInf;
  return depth * (1.0 + r) * negative_half_power(denom, n);
}

double poisson_ball(const BallPoint& x, std::span<const double> yp) {
  if (!(x.r < 1.0)) throw DomainError("Poisson kernel needs |x| < 1");
  double norm2 = 0.0;
  for (double c : yp) norm2 += c * c;
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12) throw DomainError("Poisson pole must be a unit vector");
  return poisson_ball_zonal(x.dim(), x.r, 1.0 - x.r, direction_gap(x.dir, yp));
}

double q_beta_bound(const BallPoint& x, const BallPoint& y, const KernelSpec& spec) {
  if (spec.domain != Domain::ball) throw PreconditionError("q_beta_bound needs a ball kernel spec");
  if (!(spec.beta > 0.0)) throw PreconditionError("kernel estimate requires beta > 0");
  const double u = x.r * y.r;
  const double omu = (1.0 - y.r) + y.r * (1.0 - x.r);
  const double d2 = omu * omu + 2.0 * u * direction_gap(x.dir, y.dir);
  if (!(d2 > 0.0)) return kInf;
  return std::pow(d2, -0.5 * (spec.n + spec.beta));
}

double poisson_halfspace_constant(int n) {
  return std::exp(std::lgamma(0.5 * (n + 1))) / std::pow(std::numbers::pi, 0.5 * (n + 1));
}

double poisson_halfspace(std::span<const double> x, double t) {
  if (!(t > 0.0)) throw DomainError("half-space Poisson kernel needs t > 0");
  if (x.empty()) throw PreconditionError("half-space Poisson kernel needs n >= 1");
  double X = 0.0;
  for (double c : x) X += c * c;
  const int n = static_cast<int>(x.size());
  return poisson_halfspace_constant(n) * t * std::pow(X + t * t, -0.5 * (n + 1));
}

HalfSpaceKernel::HalfSpaceKernel(int n, int m) : n_(n), m_(m), cn_(poisson_halfspace_constant(n)) {
  if (n < 1) throw PreconditionError("half-space kernels need n >= 1");
  if (m < 0) throw PreconditionError("half-space kernel order needs m >= 0");
  coef_.push_back({1.0});   // p_0 = t
  for (int j = 0; j <= m; ++j) {
    const auto& cur = coef_.back();
    std::vector<double> next((j + 2) / 2 + 1, 0.0);
    for (std::size_t a = 0; a < cur.size(); ++a) {
      const double b = j + 1 - 2.0 * static_cast<double>(a);
      const double c = cur[a];
      if (c == 0.0) continue;
      if (b > 0) next[a + 1] += b * c;
      next[a] += (b - (n + 1 + 2.0 * j)) * c;
    }
    coef_.push_back(std::move(next));
  }
}

double HalfSpaceKernel::poisson_derivative(int j, double X, double t) const {
  if (j < 0 || j > m_ + 1) throw PreconditionError("derivative order exceeds m + 1");
  const double D = X + t * t;
  if (!(D > 0.0)) return kInf;
  const double xh = X / D;
  const double th = t / std::sqrt(D);
  const auto& c = coef_[j];
  double v = 0.0;
  double xp = 1.0;
  for (std::size_t a = 0; a < c.size(); ++a) {
    const int b = j + 1 - 2 * static_cast<int>(a);
    if (b >= 0 && c[a] != 0.0) v += c[a] * xp * std::pow(th, b);
    xp *= xh;
  }
  return cn_ * v * std::pow(D, -0.5 * (n_ + j));
}

double HalfSpaceKernel::operator()(double X, double T) const {
  if (!(T > 0.0)) throw DomainError("half-space kernel needs t + s > 0");
  double scale = std::pow(-2.0, m_ + 1) / std::tgamma(m_ + 1.0);
  return scale * poisson_derivative(m_ + 1, X, T);
}

double HalfSpaceKernel::operator()(const HalfPoint& z, const HalfPoint& w) const {
  if (z.dim() != n_ || w.dim() != n_) throw PreconditionError("point dimension differs from n");
  if (!(z.s > 0.0 && w.s > 0.0)) throw DomainError("half-space points need positive height");
  double X = 0.0;
  for (int i = 0; i < n_; ++i) X += (z.y[i] - w.y[i]) * (z.y[i] - w.y[i]);
  return (*this)(X, z.s + w.s);
}

double q_m(const HalfPoint& z, const HalfPoint& w, const KernelSpec& spec) {
  if (spec.domain != Domain::halfspace) throw PreconditionError("q_m needs a half-space kernel spec");
  return HalfSpaceKernel(spec.n, spec.m)(z, w);
}

double q_m_bound(const HalfPoint& z, const HalfPoint& w, const KernelSpec& spec) {
  if (spec.domain != Domain::halfspace) throw PreconditionError("q_m_bound needs a half-space kernel spec");
  if (z.dim() != spec.n || w.dim() != spec.n) throw PreconditionError("point dimension differs from n");
  double X = 0.0;
  for (int i = 0; i < spec.n; ++i) X += (z.y[i] - w.y[i]) * (z.y[i] - w.y[i]);
  const double T = z.s + w.s;
  return std::pow(X + T * T, -0.5 * (spec.n + spec.m + 1));
}

}  // namespace bergman
