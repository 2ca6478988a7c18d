#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bergman/errors.hpp"
#include "bergman/spaces.hpp"
#include "doctest.h"

using namespace bergman;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<std::vector<double>> random_ball_points(int n, int count, double rmax, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, rmax);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) {
    std::vector<double> x(n);
    double s = 0.0;
    for (double& v : x) {
      v = g(gen);
      s += v * v;
    }
    const double r = u(gen);
    for (double& v : x) v *= r / std::sqrt(s);
    pts.push_back(x);
  }
  return pts;
}

}  // namespace

TEST_CASE("gallery functions are harmonic") {
  for (int n : {2, 3}) {
    for (const auto& f : gallery(n, n - 1)) {
      CAPTURE(f.label);
      std::vector<std::vector<double>> pts;
      if (f.domain == Domain::ball) {
        pts = random_ball_points(n, 10, 0.9, 7);
      } else {
        std::mt19937 gen(3);
        std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.1, 3.0);
        for (int i = 0; i < 10; ++i) {
          std::vector<double> z;
          for (int j = 0; j < f.n; ++j) z.push_back(u(gen));
          z.push_back(s(gen));
          pts.push_back(z);
        }
      }
      CHECK(harmonicity_defect(f, pts) <= 1e-3);
    }
  }
}

TEST_CASE("reduced forms agree with cartesian evaluation") {
  for (int n : {2, 3}) {
    for (const auto& f : gallery(n, n - 1)) {
      CAPTURE(f.label);
      for (double r : {0.0, 0.3, 0.9, 0.999}) {
        for (double th : {0.0, 0.4, 1.5, 3.0}) {
          if (f.domain == Domain::ball) {
            const auto x = f.ball_point(r, th);
            CHECK(f.zonal(r, 1.0 - r, th) == doctest::Approx(f.eval(x)).epsilon(1e-10));
          } else {
            std::vector<double> z(f.n + 1, 0.0);
            z[0] = 3.0 * r;
            z[f.n] = th;
            CHECK(f.radial(3.0 * r, th) == doctest::Approx(f.eval(z)).epsilon(1e-12));
          }
        }
      }
    }
  }
  CHECK_THROWS_AS(gallery_function("nope"), PreconditionError);
}

TEST_CASE("integral means") {
  const auto rule = make_sphere_rule(3, 20);
  const auto one = gallery_function("one");
  const auto x1 = gallery_function("x1");
  const auto x2 = gallery_function("x2");
  const auto pe = gallery_function("poisson_e1");
  for (double r : {0.0, 0.5, 0.9}) {
    for (double p : {0.5, 1.0, 2.0, HUGE_VAL}) CHECK(mp_norm(one, p, r, rule) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mp_norm(x1, 2.0, r, rule) == doctest::Approx(r / std::sqrt(3.0)).epsilon(1e-13));
    CHECK(mp_norm(x2, 2.0, r, rule) == doctest::Approx(r / std::sqrt(3.0)).epsilon(1e-13));
  }
  const auto fine = make_sphere_rule(3, 120);
  CHECK(mp_norm(pe, 1.0, 0.5, fine) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(mp_norm(one, 2.0, 1.0, rule), DomainError);
}

TEST_CASE("integral means increase with the radius") {
  const auto rule = make_sphere_rule(3, 120);
  for (const auto& f : gallery(3, 1)) {
    if (f.domain != Domain::ball) continue;
    CAPTURE(f.label);
    for (double p : {1.0, 2.0}) {
      double prev = 0.0;
      for (double r = 0.0; r < 0.8; r += 0.05) {
        const double m = mp_norm(f, p, r, rule);
        CHECK(m >= prev * (1.0 - 1e-9));
        prev = m;
      }
    }
  }
}

TEST_CASE("Bergman norms with closed forms") {
  const auto one = gallery_function("one");
  for (double p : {0.5, 1.0, 3.0}) {
    const auto a1 = bergman_norm(one, p, 1.0);
    CHECK(a1.profile.classification == Classification::finite);
    CHECK(a1.integral == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(a1.value == doctest::Approx(std::pow(0.4, 1.0 / p)).epsilon(1e-12));
    CHECK(bergman_norm(one, p, 0.0).value == doctest::Approx(1.0).epsilon(1e-12));
  }
  const auto pe = bergman_norm(gallery_function("poisson_e1"), 1.0, 0.0);
  CHECK(pe.profile.classification == Classification::finite);
  CHECK(pe.value == doctest::Approx(1.0).epsilon(1e-9));
  // ||x_1||^2_{A^2_0} = (1/3) 3 int r^4 dr = 1/5
  CHECK(bergman_norm(gallery_function("x1"), 2.0, 0.0).integral == doctest::Approx(0.2).epsilon(1e-12));
  // P(., e_1) in A^2_1 for n = 3: M_2^2 ~ (1 - r)^{-2}, so the weighted integral diverges logarithmically
  CHECK(bergman_norm(gallery_function("poisson_e1"), 2.0, 1.0).divergent);
  CHECK_THROWS_AS(bergman_norm(one, 2.0, -1.0), PreconditionError);
}

TEST_CASE("mixed norms collapse at p = q") {
  for (const auto& f : gallery(3, 1)) {
    CAPTURE(f.label);
    for (double p : {1.0, 2.0}) {
      const double alpha = f.domain == Domain::ball ? 0.5 : 1.0;
      const auto a = bergman_norm(f, p, alpha);
      const auto b = mixed_norm(f, Scale::Bpq, p, p, alpha);
      const auto fq = mixed_norm(f, Scale::Fpq, p, p, alpha);
      CHECK(a.profile.classification == b.profile.classification);
      CHECK(a.profile.classification == fq.profile.classification);
      if (a.profile.classification != Classification::finite) continue;
      CHECK(b.value == a.value);
      CHECK(std::abs(fq.value - a.value) <= 1e-8 * a.value);
    }
  }
  HarmonicFn zero = gallery_function("one").scaled(0.0);
  CHECK(mixed_norm(zero, Scale::Fpq, 2.0, 3.0, 0.0).value == 0.0);
  CHECK(mixed_norm(zero, Scale::Bpq, 2.0, 3.0, 0.0).value == 0.0);
}

TEST_CASE("mixed norms of a constant") {
  // B: (int (1 - r^2)^a n r^{n-1} dr)^{1/q}; F: same with exponent 1/q too.
  const auto one = gallery_function("one");
  const auto b = mixed_norm(one, Scale::Bpq, 2.0, 3.0, 1.0);
  const auto f = mixed_norm(one, Scale::Fpq, 2.0, 3.0, 1.0);
  CHECK(b.value == doctest::Approx(std::pow(0.4, 1.0 / 3.0)).epsilon(1e-12));
  CHECK(f.value == doctest::Approx(std::pow(0.4, 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("half-space norms") {
  // int_R P(y, h)^2 dy = 1/(2 pi h); the height integral of 1/(2 pi (s + 1)) diverges.
  const auto ph = gallery_function("poisson_hs");
  const auto d = mixed_norm(ph, Scale::Bpq, 2.0, 2.0, 0.0);
  CHECK(d.divergent);
  // For Q_0(., (0, 1)), n = 1: int_R Q_0^2 dy = 1/(pi T^3) with T = s + 1, so
  // ||Q_0||^2 = int s^alpha / (pi (1 + s)^3) ds = B(alpha + 1, 2 - alpha)/pi.
  const auto qm = gallery_function("qm_w0");
  for (double alpha : {0.0, 0.5}) {
    const double exact = std::exp(std::lgamma(alpha + 1) + std::lgamma(2 - alpha) - std::lgamma(3.0)) / kPi;
    const auto b = bergman_norm(qm, 2.0, alpha);
    REQUIRE(b.profile.classification == Classification::finite);
    CHECK(b.integral == doctest::Approx(exact).epsilon(1e-8));
    const auto f = mixed_norm(qm, Scale::Fpq, 2.0, 2.0, alpha);
    CHECK(f.integral == doctest::Approx(exact).epsilon(1e-8));
  }
}

TEST_CASE("weighted norms with S-class weights") {
  const auto one = gallery_function("one");
  const auto lin = SWeight::power(1.0);
  CHECK(weighted_norm(one, 1.0, lin).value == doctest::Approx(0.25).epsilon(1e-12));
  for (const auto& f : gallery(3, 1)) {
    if (f.domain != Domain::ball) continue;
    CAPTURE(f.label);
    for (double alpha : {0.5, 1.0, 2.0}) {
      const auto w = weighted_norm(f, 1.0, SWeight::power(alpha));
      const auto a = bergman_norm(f, 1.0, alpha);
      const double ratio = w.integral / a.integral;
      CHECK(ratio >= std::pow(2.0, -alpha) * (1.0 - 1e-12));
      CHECK(ratio <= 1.0 + 1e-12);
    }
  }
  // n = 2, v(u) = u ln(e/u): 2 int u (1 - u)(1 - ln u) du = 11/18
  const auto one2 = gallery_function("one", 2);
  CHECK(weighted_norm(one2, 1.0, SWeight::log_power(1.0, 1.0)).value == doctest::Approx(11.0 / 18.0).epsilon(1e-10));
}

TEST_CASE("S-class measurement") {
  for (double a : {0.25, 0.5, 1.0, 2.0}) {
    const auto w = SWeight::power(a);
    CHECK(w.alpha_v == doctest::Approx(a).epsilon(0.1));
    CHECK(w.m_v == doctest::Approx(std::pow(0.5, a)).epsilon(1e-12));
  }
  const auto lw = SWeight::log_power(1.0, 1.0);
  CHECK(lw.alpha_v == doctest::Approx(1.0).epsilon(0.1));
  CHECK(weight_threshold(SWeight::power(0.5), 2.0) == doctest::Approx(0.75));
  CHECK(weight_threshold(SWeight::power(0.5), INFINITY) == 0.0);
  CHECK_THROWS_AS(SWeight::measured("neg", [](double u) { return -u; }), PreconditionError);
  CHECK_THROWS_AS(SWeight::measured("grows", [](double u) { return std::exp(1.0 / u); }), PreconditionError);
}

TEST_CASE("weighted sup norms") {
  const auto one = ainf_norm(gallery_function("one"), 1.0);
  CHECK(one.value == doctest::Approx(1.0));
  CHECK(std::abs(one.witness[0]) + std::abs(one.witness[1]) + std::abs(one.witness[2]) == 0.0);
  CHECK(one.profile.classification == Classification::finite);

  const auto pe = gallery_function("poisson_e1");
  const auto p2 = ainf_norm(pe, 2.0);
  CHECK(!p2.unbounded);
  CHECK(p2.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(p2.value <= 2.0);
  CHECK(p2.witness[0] > 0.999);
  CHECK(ainf_norm(pe, 1.0).unbounded);

  const auto k2 = ainf_norm(gallery_function("solid_k2"), 0.5);
  CHECK(!k2.unbounded);
  double r2 = 0.0;
  for (double v : k2.witness) r2 += v * v;
  CHECK(std::sqrt(r2) < 0.99);
  // |x_1| (1 - |x|) peaks at x = e_1 / 2 with value 1/4.
  CHECK(ainf_norm(gallery_function("x1"), 1.0).value == doctest::Approx(0.25).epsilon(1e-6));

  // Half-space: s^n P(y, s + 1) -> c_n as s -> inf; s^{n+1} |Q_0| stays bounded.
  const auto hs = ainf_norm(gallery_function("poisson_hs"), 1.0);
  CHECK(!hs.unbounded);
  CHECK(hs.value == doctest::Approx(1.0 / kPi).epsilon(1e-4));
  CHECK(ainf_norm(gallery_function("poisson_hs"), 1.5).unbounded);
  CHECK(!ainf_norm(gallery_function("qm_w0"), 2.0).unbounded);
  CHECK_THROWS_AS(ainf_norm(gallery_function("one"), 0.0), PreconditionError);
}

TEST_CASE("pointwise embedding") {
  const auto one = gallery_function("one");
  for (double p : {1.0, 2.0}) {
    for (double alpha : {0.0, 1.0}) {
      const auto e = embedding_check(one, p, alpha);
      CHECK(e.applicable);
      CHECK(e.ratio == doctest::Approx(1.0 / bergman_norm(one, p, alpha).value).epsilon(1e-10));
    }
  }
  const auto k1 = embedding_check(gallery_function("solid_k1"), 2.0, 0.0);
  CHECK(k1.applicable);
  CHECK(std::isfinite(k1.ratio));
  CHECK(k1.interior_witness);
  for (const auto& f : gallery(3, 1)) {
    CAPTURE(f.label);
    const auto e = embedding_check(f, 1.0, 0.5);
    if (!e.applicable) continue;
    CHECK(std::isfinite(e.ratio));
    CHECK(e.drift <= 0.05);
  }
  CHECK(!embedding_check(gallery_function("poisson_e1"), 2.0, 1.0).applicable);
}

TEST_CASE("norm specifications") {
  NormSpec s;
  s.scale = Scale::Bpq;
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s.q = 2.0;
  CHECK_NOTHROW(s.validate());
  s.scale = Scale::Ainf;
  s.q.reset();
  s.alpha = 0.0;
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s.scale = Scale::hpv;
  CHECK_THROWS_AS(s.validate(), PreconditionError);
  s.weight = SWeight::power(1.0);
  const auto r = evaluate_norm(gallery_function("one"), s);
  CHECK(r.value == doctest::Approx(std::sqrt(0.25)).epsilon(1e-12));
  NormSpec m;
  m.scale = Scale::Mp;
  m.radius = 0.5;
  CHECK(evaluate_norm(gallery_function("x1"), m).value == doctest::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-12));
}
