#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bergman/errors.hpp"
#include "bergman/kernels.hpp"
#include "bergman/quadrature.hpp"
#include "bergman/spaces.hpp"
#include "bergman/verify.hpp"
#include "doctest.h"

using namespace bergman;

namespace {

constexpr double kPi = std::numbers::pi;

double origin_kernel(int n, double beta) {
  return 2.0 * std::exp(std::lgamma(beta + 1.0 + 0.5 * n) - std::lgamma(beta + 1.0) - std::lgamma(0.5 * n));
}

}  // namespace

TEST_CASE("radial integral: exact case, origin value and guards") {
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.9, 0.99};
  // int_0^1 (1 - r rho)^-2 dr = (1/rho)((1 - rho)^-1 - 1) = 1/(1 - rho).
  const auto exact = verify_rro(0.0, 2.0, grid);
  CHECK(exact.pass);
  for (const auto& s : exact.samples) CHECK(std::abs(s.value - 1.0) <= 1e-9);

  for (double alpha : {-0.5, 0.0, 1.5}) {
    const double rho0[] = {0.0};
    CHECK(verify_rro(alpha, alpha + 2.0, rho0).max_ratio == doctest::Approx(1.0 / (alpha + 1.0)).epsilon(1e-12));
  }

  // Independent adaptive quadrature in the original variable.
  const double ref = adaptive_gauss([](double r) { return (1.0 - r) * std::pow(1.0 - 0.5 * r, -3.0); }, 0.0, 1.0,
                                    gauss_legendre(10));
  const double coarse = radial_power_integral(1.0, 3.0, 0.5, 16);
  const double fine = radial_power_integral(1.0, 3.0, 0.5, 24);
  CHECK(coarse == doctest::Approx(ref).epsilon(1e-12));
  CHECK(std::abs(coarse - fine) <= 1e-6 * fine);
  const double half[] = {0.5};
  const double ratio = verify_rro(1.0, 3.0, half).max_ratio;
  CHECK(ratio >= 0.5);
  CHECK(ratio <= 2.0);

  CHECK_THROWS_AS(verify_rro(0.0, 0.5, grid), PreconditionError);
  CHECK_THROWS_AS(verify_rro(-1.0, 2.0, grid), PreconditionError);
}

TEST_CASE("kernel power integral at the origin") {
  // Q_beta(0, y) is the constant 2 Gamma(beta + 1 + n/2) / (Gamma(beta + 1) Gamma(n/2)),
  // and int (1 - |y|)^delta dV = n B(n, delta + 1).
  for (int n : {2, 3}) {
    for (double delta : {0.0, 0.5}) {
      const double beta = 2.0, gamma = n + delta + 1.0;
      const double volume = n * std::exp(std::lgamma(n) + std::lgamma(delta + 1.0) - std::lgamma(n + delta + 1.0));
      const double expected = std::pow(origin_kernel(n, beta), gamma / (n + beta)) * volume;
      CHECK(qbeta_power_integral(n, beta, delta, gamma, 0.0) == doctest::Approx(expected).epsilon(1e-9));
    }
  }
}

TEST_CASE("kernel power law along the boundary approach") {
  const std::vector<double> rs{0.5, 0.9, 0.99};
  const auto rep = verify_qbeta(3, 0.0, 4.0, 2.0, rs);
  CHECK(rep.pass);
  CHECK(rep.measure("approach_drift") <= 0.2);
  CHECK(rep.grid_refinement_drift <= 0.1);

  // Monte-Carlo at r = 0.9 with the series evaluation of the kernel.
  std::mt19937_64 gen(13);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const BallPoint x = BallPoint::polar(0.9, {1.0, 0.0, 0.0});
  const KernelSpec spec = KernelSpec::ball(3, 2.0);
  const int N = 400000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    std::vector<double> d(3);
    double len = 0.0;
    for (double& c : d) {
      c = normal(gen);
      len += c * c;
    }
    for (double& c : d) c /= std::sqrt(len);
    const double rho = std::cbrt(unif(gen));   // uniform in the normalized volume
    sum += std::pow(std::abs(q_beta_series(x, BallPoint::polar(rho, d), spec).value), 0.8);
  }
  const double mc = sum / N;
  CHECK(qbeta_power_integral(3, 2.0, 0.0, 4.0, 0.9) == doctest::Approx(mc).epsilon(0.03));

  CHECK_THROWS_AS(verify_qbeta(3, 0.0, 3.0, 2.0, rs), PreconditionError);
  CHECK_THROWS_AS(verify_qbeta(3, 0.0, 4.0, 0.0, rs), PreconditionError);
}

TEST_CASE("half-space kernel power law and exact scaling") {
  const std::vector<double> ts{1.0, 0.125, std::ldexp(1.0, -10)};
  struct Triple {
    int n;
    double delta, gamma;
    int m;
  };
  for (const Triple& c : {Triple{1, 0.0, 4.0, 0}, Triple{1, 0.5, 5.0, 1}, Triple{2, -0.5, 4.0, 2}}) {
    CAPTURE(c.n);
    CAPTURE(c.m);
    const auto rep = verify_qm(c.n, c.delta, c.gamma, c.m, ts);
    CHECK(rep.pass);
    CHECK(rep.measure("scaling_error") <= 1e-4);
  }
  CHECK_THROWS_AS(verify_qm(1, 0.0, 2.0, 0, ts), PreconditionError);
}

TEST_CASE("half-space kernel power integral against Monte-Carlo") {
  // n = 1, m = 0: |Q_0|^2 with Q_0 = (2/pi)(T^2 - y^2)/(y^2 + T^2)^2, T = 1 + s.
  // Sample y = tan(pi (u - 1/2)), s = tan(pi v / 2).
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int N = 1000000;
  double sum = 0.0;
  for (int i = 0; i < N; ++i) {
    const double a = kPi * (unif(gen) - 0.5), b = 0.5 * kPi * unif(gen);
    const double y = std::tan(a), s = std::tan(b);
    const double T = 1.0 + s;
    const double q = (2.0 / kPi) * (T * T - y * y) / ((y * y + T * T) * (y * y + T * T));
    const double jac = kPi * (1.0 + y * y) * 0.5 * kPi * (1.0 + s * s);
    sum += q * q * jac;
  }
  const double mc = sum / N;
  const auto I = qm_power_integral(1, 0, 0.0, 4.0, 1.0);
  CHECK(I.value == doctest::Approx(mc).epsilon(0.02));

  // Halving the height cutoff moves the value by less than the reported tail.
  PowerIntegralGrid coarse;
  coarse.s_min = 1e-3;
  PowerIntegralGrid halved = coarse;
  halved.s_min = 0.5e-3;
  for (double delta : {0.0, -0.5}) {
    const auto a = qm_power_integral(1, 1, delta, 4.0, 1.0, coarse);
    const auto b = qm_power_integral(1, 1, delta, 4.0, 1.0, halved);
    CHECK(std::abs(a.value - b.value) < a.tail_bound);
  }
}

TEST_CASE("kernel estimates") {
  // Aligned point of the half-space kernel, n = 1, m = 0: 2/pi.
  const auto aligned = verify_kernel_bounds(KernelSpec::halfspace(1, 0), KernelBound::halfspace);
  CHECK(std::abs(aligned.measure("aligned_value") - 2.0 / kPi) <= 1e-12);
  for (int n : {1, 2}) {
    for (int m = 0; m <= 3; ++m) {
      const auto rep = verify_kernel_bounds(KernelSpec::halfspace(n, m), KernelBound::halfspace, 1024);
      CHECK(rep.pass);
      CHECK(std::isfinite(rep.max_ratio));
      CHECK(rep.grid_refinement_drift <= 0.1);
      CHECK(rep.max_ratio >= rep.measure("aligned_value"));
    }
  }

  for (double beta : {1.0, 2.0}) {
    const auto rep = verify_kernel_bounds(KernelSpec::ball(3, beta), KernelBound::pointwise, 2048);
    CHECK(rep.pass);
    // At u = 0 the ratio equals Q_beta(0, y) exactly.
    CHECK(rep.max_ratio >= origin_kernel(3, beta) * (1.0 - 1e-12));
  }
  const auto mean = verify_kernel_bounds(KernelSpec::ball(3, 1.0), KernelBound::sphere_mean, 512);
  CHECK(mean.pass);
  CHECK(mean.max_ratio >= origin_kernel(3, 1.0) * (1.0 - 1e-12));

  // n = 3, beta = 3: int_S |r x' - e_1|^-3 dsigma = 1/(1 - r^2), so the ratio
  // is 1/(1 + r), largest at r = 0.
  const auto power = verify_kernel_bounds(KernelSpec::ball(3, 3.0), KernelBound::sphere_power, 512);
  CHECK(power.pass);
  CHECK(power.max_ratio == doctest::Approx(1.0).epsilon(1e-10));

  CHECK_THROWS_AS(verify_kernel_bounds(KernelSpec::ball(3, 0.0), KernelBound::pointwise), PreconditionError);
  CHECK_THROWS_AS(verify_kernel_bounds(KernelSpec::ball(3, 2.0), KernelBound::sphere_power), PreconditionError);
  CHECK_THROWS_AS(verify_kernel_bounds(KernelSpec::ball(3, 1.0), KernelBound::halfspace), PreconditionError);
}

TEST_CASE("Poisson series against the closed form") {
  const auto rep = verify_poisson_series(3, 0.5);
  CHECK(rep.pass);
  CHECK(rep.measure("limit") == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(std::abs(rep.measure("rate") - 0.5) <= 0.05);
  // e_K = sum_{k > K} (2k + 1) 2^-k.
  for (const auto& s : rep.samples) {
    long double tail = 0.0L;
    for (int k = static_cast<int>(s.at[0]) + 1; k < 200; ++k) tail += (2.0L * k + 1.0L) * std::pow(0.5L, k);
    CHECK(s.value == doctest::Approx(static_cast<double>(tail)).epsilon(1e-6));
  }
}

TEST_CASE("ball representation") {
  const auto one = gallery_function("one");
  for (double beta : {0.0, 0.5, 1.0, 2.0}) {
    for (const auto& x : default_representation_grid(Domain::ball, 3)) {
      CHECK(std::abs(represent_ball(one, beta, x) - 1.0) <= 1e-8);
    }
  }

  // The product rule about x' (no axis available) against the axial route.
  auto k2 = gallery_function("solid_k2");
  auto k2_plain = k2;
  k2_plain.zonal = nullptr;
  REQUIRE_FALSE(k2_plain.symmetric());
  for (const auto& x : default_representation_grid(Domain::ball, 3)) {
    const double fx = k2(x);
    CHECK(std::abs(represent_ball(k2_plain, 1.0, x) - fx) <= 1e-4);
    CHECK(std::abs(represent_ball(k2, 1.0, x) - fx) <= 1e-4);
  }
  const auto rep = verify_representation(k2_plain, KernelSpec::ball(3, 1.0), Hypothesis::bergman(2.0, 0.0));
  CHECK(rep.pass);

  CHECK_THROWS_AS(verify_representation(k2, KernelSpec::ball(3, 1.0), Hypothesis::bergman(0.5, 0.0)),
                  PreconditionError);
  CHECK_THROWS_AS(verify_representation(k2, KernelSpec::ball(3, 1.0), Hypothesis::bergman(2.0, 2.0)),
                  PreconditionError);
}

TEST_CASE("representation error shrinks under refinement") {
  const auto f = gallery_function("qbeta_0.9e1");
  RepresentationGrid grid;
  grid.radial_points = 8;
  grid.theta_points = 8;
  std::vector<double> errors;
  for (int level = 0; level < 3; ++level) {
    double e = 0.0;
    for (const auto& x : default_representation_grid(Domain::ball, 3)) {
      e = std::max(e, std::abs(represent_ball(f, 1.0, x, grid) - f(x)));
    }
    errors.push_back(e);
    grid = grid.refined();
  }
  CHECK(errors[1] <= errors[0]);
  CHECK(errors[2] <= std::max(errors[1], 1e-13));
}

TEST_CASE("weighted ball representation") {
  const auto f = gallery_function("poisson_e1");
  const SWeight v = SWeight::power(0.5);
  // s(v, 1) = (1/2 + 1)/1 = 3/2.
  const auto rep = verify_representation(f, KernelSpec::ball(3, 2.0), Hypothesis::weighted(1.0, v));
  CHECK(rep.pass);
  CHECK(rep.max_ratio <= 1e-3);
  try {
    verify_representation(f, KernelSpec::ball(3, 1.0), Hypothesis::weighted(1.0, v));
    FAIL("inadmissible alpha accepted");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("alpha > s(v, p)") != std::string::npos);
  }
  // P(., e_1) is not in h^2_v for v = u^{1/2}.
  CHECK_THROWS_AS(verify_representation(f, KernelSpec::ball(3, 2.0), Hypothesis::weighted(2.0, v)),
                  PreconditionError);
}

TEST_CASE("half-space representation") {
  const auto f = gallery_function("poisson_hs");
  for (int m : {1, 2}) {
    const auto rep = verify_representation(f, KernelSpec::halfspace(1, m), Hypothesis::bergman(3.0, 0.0));
    CHECK(rep.pass);
    CHECK(rep.samples.size() == 25);
    CHECK(rep.max_ratio <= 1e-3 + rep.measure("relative_tail_bound"));
  }
  // p <= 1 needs m >= (alpha + n + 1)/p - (n + 1) = 2 here.
  CHECK_THROWS_AS(verify_representation(f, KernelSpec::halfspace(1, 0), Hypothesis::bergman(1.0, 2.0)),
                  PreconditionError);
}
