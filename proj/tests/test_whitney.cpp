#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "bergman/errors.hpp"
#include "bergman/spaces.hpp"
#include "bergman/whitney.hpp"
#include "doctest.h"

using namespace bergman;

namespace {

bool interiors_meet(const WhitneyCube& a, const WhitneyCube& b) {
  for (int i = 0; i < a.dim(); ++i) {
    if (!(a.corner[i] < b.corner[i] + b.side && b.corner[i] < a.corner[i] + a.side)) return false;
  }
  return true;
}

// Dyadic rationals k / 2^20, so that membership tests are exact.
double dyadic_uniform(std::mt19937_64& gen, double lo, double hi) {
  std::uniform_int_distribution<std::int64_t> k(static_cast<std::int64_t>(std::ldexp(lo, 20)),
                                                static_cast<std::int64_t>(std::ldexp(hi, 20)) - 1);
  return std::ldexp(static_cast<double>(k(gen)), -20);
}

}  // namespace

TEST_CASE("locating a cube") {
  const auto c = locate_cube(std::vector<double>{0.3, 0.7});
  CHECK(c.level == -1);
  CHECK(c.index == std::vector<std::int64_t>{0});
  CHECK(c.corner == std::vector<double>{0.0, 0.5});
  CHECK(c.side == 0.5);
  // Ties go to the cube above / to the right.
  const auto t = locate_cube(std::vector<double>{0.5, 1.0});
  CHECK(t.level == 0);
  CHECK(t.index == std::vector<std::int64_t>{0});
  const auto neg = locate_cube(std::vector<double>{-0.3, 0.25});
  CHECK(neg.level == -2);
  CHECK(neg.index == std::vector<std::int64_t>{-2});
  CHECK_THROWS_AS(locate_cube(std::vector<double>{0.0, 0.0}), DomainError);
}

TEST_CASE("cube counts on the unit strip") {
  for (int L = 1; L <= 12; ++L) {
    const auto cubes = whitney_halfspace({{0.0, std::ldexp(1.0, -L)}, {1.0, 1.0}}, -L, -1);
    CHECK(cubes.size() == (std::size_t{1} << (L + 1)) - 2);
  }
  CHECK(whitney_halfspace({{0.0, 0.5}, {0.0, 1.0}}, -1, -1).empty());
  CHECK_THROWS_AS(whitney_halfspace({{0.0, 0.25}, {1.0, 1.0}}, -1, -1), PreconditionError);
}

TEST_CASE("cubes are disjoint, cover the box and have side comparable to height") {
  const HalfBox box{{-1.0, 0.125}, {1.5, 4.0}};
  const auto cubes = whitney_halfspace(box, -3, 1);
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    const auto& c = cubes[i];
    CHECK(c.corner.back() == c.side);                // heights [side, 2 side)
    CHECK(c.side == std::ldexp(1.0, c.level));
    for (std::size_t j = i + 1; j < cubes.size(); ++j) CHECK_FALSE(interiors_meet(c, cubes[j]));
  }
  std::mt19937_64 gen(1);
  for (int s = 0; s < 20000; ++s) {
    const std::vector<double> z = {dyadic_uniform(gen, -1.0, 1.5), dyadic_uniform(gen, 0.125, 4.0)};
    int hits = 0;
    for (const auto& c : cubes) hits += c.contains(z) ? 1 : 0;
    REQUIRE(hits == 1);
    const auto own = locate_cube(z);
    CHECK(own.side <= z[1]);
    CHECK(z[1] < 2.0 * own.side);
  }
}

TEST_CASE("enumeration order is level-major and lexicographic") {
  const auto cubes = whitney_halfspace({{0.0, 0.0, 0.25}, {1.0, 1.0, 1.0}}, -2, -1);
  for (std::size_t i = 1; i < cubes.size(); ++i) {
    const auto& a = cubes[i - 1];
    const auto& b = cubes[i];
    CHECK((a.level < b.level || (a.level == b.level && a.index < b.index)));
  }
  CHECK(cubes.size() == 4 + 16);
}

TEST_CASE("discrete sums against integrals") {
  const auto cubes = whitney_halfspace({{0.0, 0.25}, {1.0, 1.0}}, -2, -1);
  REQUIRE(cubes.size() == 6);
  const auto one = discrete_vs_integral([](std::span<const double>) { return 1.0; }, 0.0, cubes);
  CHECK(one.sum == 0.75);
  CHECK(one.integral == doctest::Approx(0.75).epsilon(1e-14));
  // int_0^1 int_{1/4}^1 s ds dy = 15/32; the centre sum is exact for linear fields.
  const auto lin = discrete_vs_integral([](std::span<const double> z) { return z[1]; }, 0.0, cubes);
  CHECK(lin.integral == doctest::Approx(15.0 / 32.0).epsilon(1e-14));
  CHECK(lin.sum == 15.0 / 32.0);
  CHECK(lin.ratio == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(discrete_vs_integral([](std::span<const double>) { return -1.0; }, 0.0, cubes), EvaluationError);
}

TEST_CASE("gallery comparisons stay in the band") {
  for (int n : {1, 2}) {
    const double R = n == 1 ? 8.0 : 4.0;
    const int depth = n == 1 ? 6 : 4;
    HalfBox box;
    box.lo.assign(n, -R);
    box.hi.assign(n, R);
    box.lo.push_back(std::ldexp(1.0, -depth));
    box.hi.push_back(8.0);
    const auto cubes = whitney_halfspace(box, -depth, 2);
    for (const auto& f : gallery(3, n)) {
      if (f.domain != Domain::halfspace) continue;
      for (double p : {1.0, 2.0}) {
        for (double gamma : {0.0, 1.0}) {
          CAPTURE(n);
          CAPTURE(f.label);
          CAPTURE(p);
          CAPTURE(gamma);
          const auto r =
              discrete_vs_integral([&](std::span<const double> z) { return std::pow(std::abs(f(z)), p); }, gamma, cubes);
          CHECK(r.ratio >= 0.5);
          CHECK(r.ratio <= 2.0);
        }
      }
    }
  }
}

TEST_CASE("deeper boundary levels tighten the band for a continuous field") {
  // The added cubes are small where the field is smooth, so the relative
  // error of the whole sum shrinks.
  auto g = [](std::span<const double> z) { return std::exp(-z[0] * z[0] - z[1]); };
  double prev = HUGE_VAL;
  for (int L = 1; L <= 6; ++L) {
    const auto cubes = whitney_halfspace({{-2.0, std::ldexp(1.0, -L)}, {2.0, 2.0}}, -L, 0);
    const double err = std::abs(discrete_vs_integral(g, 0.0, cubes).ratio - 1.0);
    CHECK(err <= prev);
    prev = err;
  }
}

TEST_CASE("ball cells") {
  const auto d = whitney_ball(3, 4);
  REQUIRE(d.cells_per_level.size() == 4);
  CHECK(d.cells_per_level[0] >= 4);
  CHECK(d.cells_per_level[0] <= 64);
  CHECK(d.cells.front().cap_radius == 0.5);
  for (int j = 1; j < 4; ++j) {
    const double growth = static_cast<double>(d.cells_per_level[j]) / d.cells_per_level[j - 1];
    CHECK(growth >= 4.0 / 4.0);
    CHECK(growth <= 4.0 * 4.0);
  }
  CHECK(d.c2 / d.c1 <= 8.0);
  CHECK(d.overlap >= 1);

  std::mt19937_64 gen(2);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r_max = 1.0 - std::ldexp(1.0, -5);
  int worst = 0;
  for (int s = 0; s < 10000; ++s) {
    std::vector<double> x(3);
    double len = 0.0;
    for (double& v : x) {
      v = normal(gen);
      len += v * v;
    }
    const double r = 0.5 + (r_max - 0.5) * u(gen);
    for (double& v : x) v *= r / std::sqrt(len);
    const auto cells = d.cells_containing(x);
    REQUIRE(!cells.empty());
    worst = std::max(worst, static_cast<int>(cells.size()));
    for (auto id : cells) {
      const double ratio = d.cells[id].diameter() / (1.0 - r);
      CHECK(ratio >= d.c1);
      CHECK(ratio <= d.c2);
    }
  }
  CHECK(worst <= 2 * d.overlap);
  CHECK(d.cells_containing(std::vector<double>{0.1, 0.0, 0.0}).empty());
}

TEST_CASE("ball cells in the plane and determinism") {
  const auto a = whitney_ball(2, 5);
  const auto b = whitney_ball(2, 5);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].cap_center == b.cells[i].cap_center);
  for (int j = 1; j < 5; ++j) {
    const double growth = static_cast<double>(a.cells_per_level[j]) / a.cells_per_level[j - 1];
    CHECK(growth >= 0.5);
    CHECK(growth <= 8.0);
  }
  std::ostringstream os;
  write_cells_csv(os, a);
  CHECK(os.str().rfind("level,center1,center2,cap_radius,r_lo,r_hi\n", 0) == 0);
  CHECK_THROWS_AS(whitney_ball(3, 0), PreconditionError);
}

TEST_CASE("cube CSV") {
  const auto cubes = whitney_halfspace({{0.0, 0.5}, {1.0, 1.0}}, -1, -1);
  std::ostringstream os;
  write_cubes_csv(os, cubes);
  CHECK(os.str() == "level,index1,corner1,height,side\n-1,0,0,0.5,0.5\n-1,1,0.5,0.5,0.5\n");
}
