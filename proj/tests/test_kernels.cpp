#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bergman/errors.hpp"
#include "bergman/kernels.hpp"
#include "doctest.h"

using namespace bergman;

namespace {

std::vector<double> random_unit(std::mt19937& gen, int n) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  double s = 0.0;
  for (double& c : v) {
    c = g(gen);
    s += c * c;
  }
  for (double& c : v) c /= std::sqrt(s);
  return v;
}

double binomial(int a, int b) {
  if (b < 0 || a < b) return 0.0;
  return std::round(std::exp(std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0)));
}

// Finite-difference weights for the derivative of order `order` at x0
// (Fornberg's recursion).
std::vector<long double> fd_weights(long double x0, const std::vector<long double>& x, int order) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<long double>> c(n, std::vector<long double>(order + 1, 0.0L));
  long double c1 = 1.0L;
  long double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    long double c2 = 1.0L;
    const long double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const long double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<long double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][order];
  return w;
}

}  // namespace

TEST_CASE("zonal harmonics: low degrees and dimensions") {
  const ZonalTable t3(3, 40);
  CHECK(zonal(0, 0.3, t3) == 1.0);
  CHECK(zonal(1, 0.3, t3) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(t3.dimension(1) == doctest::Approx(3.0));
  for (int k = 0; k <= 40; ++k) CHECK(t3.dimension(k) == doctest::Approx(2.0 * k + 1.0).epsilon(1e-12));

  // d_k = C(k+n-1, n-1) - C(k+n-3, n-1)
  for (int n : {4, 5, 7}) {
    const ZonalTable t(n, 20);
    for (int k = 0; k <= 20; ++k) {
      CHECK(t.dimension(k) == doctest::Approx(binomial(k + n - 1, n - 1) - binomial(k + n - 3, n - 1)).epsilon(1e-12));
    }
  }

  const ZonalTable t2(2, 30);
  const double theta = 0.77;
  for (int k = 1; k <= 30; ++k) {
    CHECK(zonal(k, std::cos(theta), t2) == doctest::Approx(2.0 * std::cos(k * theta)).epsilon(1e-11));
  }
  CHECK_THROWS_AS(zonal(1, 1.5, t3), DomainError);
  CHECK_THROWS_AS(zonal(41, 0.5, t3), PreconditionError);
}

TEST_CASE("Poisson series converges to the closed form") {
  const ZonalTable t3(3, 200);
  double s = 0.0;
  for (int k = 0; k <= 200; ++k) s += std::pow(0.5, k) * zonal(k, 1.0, t3);
  CHECK(s == doctest::Approx(6.0).epsilon(1e-14));
  const double e1[] = {1.0, 0.0, 0.0};
  CHECK(poisson_ball(BallPoint::polar(0.5, {1.0, 0.0, 0.0}), e1) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(poisson_ball(BallPoint::polar(0.0, {0.0, 1.0, 0.0}), e1) == 1.0);

  std::mt19937 gen(7);
  for (int n : {2, 3, 4}) {
    const ZonalTable table(n, 400);
    double worst = 0.0;
    for (double r : {0.3, 0.5, 0.7, 0.9}) {
      for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_unit(gen, n);
        const auto b = random_unit(gen, n);
        const auto x = BallPoint::polar(r, a);
        const double exact = poisson_ball(x, b);
        const double t = 1.0 - direction_gap(a, b);
        std::vector<double> z(400);
        table.evaluate(t, z);
        for (int K : {5, 10, 20}) {
          double partial = 0.0;
          for (int k = 0; k <= K; ++k) partial += std::pow(r, k) * z[k];
          worst = std::max(worst, std::abs(partial - exact) * (1.0 - r) / std::pow(r, K + 1));
        }
      }
    }
    // The constant grows like K^{n-2} (the size of d_K) but stays moderate.
    CHECK(worst < 4.0 * std::pow(21.0, n - 2));
  }
}

TEST_CASE("Q_beta series: origin value, symmetry and guards") {
  const auto origin = BallPoint::polar(0.0, {1.0, 0.0, 0.0});
  const auto y = BallPoint::polar(0.6, {0.0, 1.0, 0.0});
  const auto v = q_beta_series(origin, y, KernelSpec::ball(3, 0.0));
  CHECK(v.value == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(v.tail_bound == 0.0);

  std::mt19937 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = BallPoint::polar(0.8, random_unit(gen, 3));
    const auto w = BallPoint::polar(0.7, random_unit(gen, 3));
    const auto spec = KernelSpec::ball(3, 1.5);
    CHECK(q_beta_series(x, w, spec).value == doctest::Approx(q_beta_series(w, x, spec).value).epsilon(1e-13));
  }
  const auto near = BallPoint::polar(0.99995, {1.0, 0.0, 0.0});
  CHECK_THROWS_AS(q_beta_series(near, near, KernelSpec::ball(3, 1.0)), DivergentSeriesError);
  SeriesTruncation loose;
  loose.allow_near_boundary = true;
  loose.k_max = 100;
  CHECK_NOTHROW(q_beta_series(near, near, KernelSpec::ball(3, 1.0), loose));
}

TEST_CASE("Q_beta tail bound brackets the doubled-order reference") {
  std::mt19937 gen(3);
  for (double beta : {0.0, 0.5, 2.0}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto x = BallPoint::polar(0.95, random_unit(gen, 3));
      const auto w = BallPoint::polar(0.9, random_unit(gen, 3));
      const auto spec = KernelSpec::ball(3, beta);
      double previous = INFINITY;
      for (int K : {20, 40, 80}) {
        const auto a = q_beta_series(x, w, spec, {K, false});
        const auto b = q_beta_series(x, w, spec, {2 * K, false});
        CHECK(std::abs(a.value - b.value) <= a.tail_bound * (1.0 + 1e-12) + 1e-13 * std::abs(b.value));
        CHECK(a.tail_bound <= previous);
        previous = a.tail_bound;
      }
    }
  }
}

TEST_CASE("closed-form Q_beta agrees with the series") {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 0.97);
  for (int n : {2, 3, 4}) {
    for (int beta : {0, 1, 2, 3, 5}) {
      const BallKernel kernel(n, beta);
      CHECK(kernel.closed_form());
      for (int trial = 0; trial < 30; ++trial) {
        const auto x = BallPoint::polar(unif(gen), random_unit(gen, n));
        const auto w = BallPoint::polar(unif(gen), random_unit(gen, n));
        const auto s = q_beta_series(x, w, KernelSpec::ball(n, beta));
        CHECK(kernel(x, w) == doctest::Approx(s.value).epsilon(1e-10).scale(1.0));
      }
    }
  }
  // Next to the diagonal close to the boundary.
  SeriesTruncation deep;
  deep.allow_near_boundary = true;
  deep.k_max = 200000;
  const auto x = BallPoint::polar(0.9997, {1.0, 0.0, 0.0});
  const auto w = BallPoint::polar(0.9999, {std::cos(1e-4), std::sin(1e-4), 0.0});
  for (int beta : {1, 3}) {
    const auto s = q_beta_series(x, w, KernelSpec::ball(3, beta), deep);
    CHECK(BallKernel(3, beta)(x, w) == doctest::Approx(s.value).epsilon(1e-8));
  }
}

TEST_CASE("Q_beta reproduces constants") {
  // int_0^1 int_S Q_beta(x, y) (1 - rho^2)^beta rho^{n-1} drho dsigma = 1
  for (int n : {2, 3}) {
    const auto srule = make_sphere_rule(n, 80);
    const auto rrule = gauss_on(0.0, 1.0, 40);
    for (int beta : {0, 1, 2}) {
      const BallKernel kernel(n, beta);
      std::vector<double> dir(n, 0.0);
      dir[0] = 0.6;
      dir[1] = 0.8;
      const auto x = BallPoint::polar(0.6, dir);
      double total = 0.0;
      for (std::size_t i = 0; i < rrule.size(); ++i) {
        const double rho = rrule.x[i];
        double shell = 0.0;
        for (std::size_t j = 0; j < srule.size(); ++j) {
          const auto node = srule.node(j);
          const auto y = BallPoint::polar(rho, {node.begin(), node.end()});
          shell += srule.weights[j] * kernel(x, y);
        }
        total += rrule.w[i] * shell * std::pow(1.0 - rho * rho, beta) * std::pow(rho, n - 1);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-11));
    }
  }
}

TEST_CASE("q_beta_bound") {
  const auto spec = KernelSpec::ball(3, 1.0);
  const auto origin = BallPoint::polar(0.0, {1.0, 0.0, 0.0});
  const auto y = BallPoint::polar(0.3, {0.0, 0.0, 1.0});
  CHECK(q_beta_bound(origin, y, spec) == doctest::Approx(1.0).epsilon(1e-15));
  const auto half = BallPoint::polar(0.5, {1.0, 0.0, 0.0});
  CHECK(q_beta_bound(half, half, spec) == doctest::Approx(std::pow(0.75, -4.0)).epsilon(1e-14));
  CHECK_THROWS_AS(q_beta_bound(half, half, KernelSpec::ball(3, 0.0)), PreconditionError);

  // |rho x - y'| = |r y - x'|, checked against brute-force Euclidean norms.
  std::mt19937 gen(13);
  std::uniform_real_distribution<double> unif(0.0, 0.99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = BallPoint::polar(unif(gen), random_unit(gen, 3));
    const auto b = BallPoint::polar(unif(gen), random_unit(gen, 3));
    double d1 = 0.0, d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      d1 += std::pow(b.r * a.r * a.dir[i] - b.dir[i], 2);
      d2 += std::pow(a.r * b.r * b.dir[i] - a.dir[i], 2);
    }
    const double v = q_beta_bound(a, b, spec);
    CHECK(v == doctest::Approx(std::pow(d1, -2.0)).epsilon(1e-10));
    CHECK(v == doctest::Approx(std::pow(d2, -2.0)).epsilon(1e-10));
    CHECK(v == doctest::Approx(q_beta_bound(b, a, spec)).epsilon(1e-12));
  }
}

TEST_CASE("half-space Poisson kernel") {
  const double zero[] = {0.0};
  CHECK(poisson_halfspace(zero, 1.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
  CHECK_THROWS_AS(poisson_halfspace(zero, 0.0), DomainError);

  std::mt19937 gen(17);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int n : {1, 2, 3}) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x(n), x2(n);
      for (int i = 0; i < n; ++i) {
        x[i] = unif(gen);
        x2[i] = 2.0 * x[i];
      }
      const double t = 0.1 + std::abs(unif(gen));
      CHECK(poisson_halfspace(x2, 2.0 * t) == doctest::Approx(std::pow(2.0, -n) * poisson_halfspace(x, t)).epsilon(1e-13));
    }
  }
  // Normalization over R^n via the radial rule; tail of order R^{-1}.
  for (int n : {1, 2}) {
    const auto rule = make_halfspace_rule(n, 1e6, 0.5, 1.0, 16, 1.0);
    for (double t : {0.5, 1.0, 3.0}) {
      double total = 0.0;
      for (std::size_t i = 0; i < rule.radial.size(); ++i) {
        const double rho = rule.radial.x[i];
        std::vector<double> x(n, 0.0);
        x[0] = rho;
        total += rule.radial.w[i] * sphere_area(n) * std::pow(rho, n - 1) * poisson_halfspace(x, t);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(4.0 * t / 1e6));
    }
  }
}

TEST_CASE("Q_m: spot value, homogeneity, bound and finite differences") {
  const auto z = HalfPoint::make({0.3}, 0.5);
  const auto w = HalfPoint::make({0.3}, 0.5);
  const auto spec0 = KernelSpec::halfspace(1, 0);
  CHECK(std::abs(q_m(z, w, spec0) - 2.0 / std::numbers::pi) < 1e-15);
  CHECK(q_m_bound(z, w, spec0) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937 gen(19);
  std::uniform_real_distribution<double> lat(-2.0, 2.0);
  std::uniform_real_distribution<double> height(0.05, 2.0);
  for (int n : {1, 2, 3}) {
    for (int m = 0; m <= 4; ++m) {
      const auto spec = KernelSpec::halfspace(n, m);
      const HalfSpaceKernel kernel(n, m);
      for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> a(n), b(n), a2(n), b2(n);
        for (int i = 0; i < n; ++i) {
          a[i] = lat(gen);
          b[i] = lat(gen);
          a2[i] = 2.0 * a[i];
          b2[i] = 2.0 * b[i];
        }
        const double t = height(gen), s = height(gen);
        const auto zz = HalfPoint::make(a, t), ww = HalfPoint::make(b, s);
        const auto zz2 = HalfPoint::make(a2, 2.0 * t), ww2 = HalfPoint::make(b2, 2.0 * s);
        const double scale = std::pow(2.0, -(n + m + 1));
        CHECK(q_m(zz2, ww2, spec) == doctest::Approx(scale * q_m(zz, ww, spec)).epsilon(1e-12).scale(0.0));
        CHECK(q_m_bound(zz2, ww2, spec) == doctest::Approx(scale * q_m_bound(zz, ww, spec)).epsilon(1e-13));
        CHECK(q_m_bound(zz, ww, spec) == doctest::Approx(q_m_bound(ww, zz, spec)).epsilon(1e-15));
        CHECK(kernel(zz, ww) == doctest::Approx(kernel(ww, zz)).epsilon(1e-13).scale(0.0));
      }

      // Central finite differences on a 15-point stencil, in extended
      // precision from the closed form of P.
      const long double cn = poisson_halfspace_constant(n);
      auto poisson = [&](long double X, long double t) {
        return cn * t * std::pow(X + t * t, -0.5L * (n + 1));
      };
      std::vector<long double> nodes(15);
      for (int trial = 0; trial < 8; ++trial) {
        const double X = std::pow(lat(gen), 2);
        const double T = 1.5 + std::abs(lat(gen));
        const double h = 0.05;
        for (int i = 0; i < 15; ++i) nodes[i] = T + (i - 7) * h;
        const auto wts = fd_weights(T, nodes, m + 1);
        long double sum = 0.0L;
        for (int i = 0; i < 15; ++i) sum += wts[i] * poisson(X, nodes[i]);
        const double fd = static_cast<double>(sum);
        const double exact = kernel.poisson_derivative(m + 1, X, T);
        // Natural size of the derivative, used where it crosses zero.
        const double size = kernel.poisson_derivative(0, X, T) * std::tgamma(m + 2.0) * std::pow(X + T * T, -0.5 * (m + 1));
        CHECK(std::abs(fd - exact) <= 1e-6 * (std::abs(exact) + size));
      }
    }
  }
}
