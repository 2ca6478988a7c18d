#include "bergman/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>

#include "bergman/errors.hpp"
#include "bergman/format.hpp"
#include "bergman/parallel.hpp"
#include "bergman/quadrature.hpp"

namespace bergman {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxCubes = 50'000'000;
constexpr std::size_t kMaxCandidates = 20'000'000;

int dyadic_floor(double s) {
  int e = 0;
  std::frexp(s, &e);   // s = m 2^e, m in [1/2, 1)
  return e - 1;
}

double chord(double angle) { return 2.0 * std::sin(0.5 * std::min(angle, kPi)); }

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

// Spatial hash of unit vectors on a grid of the given cell size.
class PointHash {
 public:
  PointHash(int n, double cell) : n_(n), cell_(cell) {}

  void insert(std::span<const double> p, std::uint32_t id) { buckets_[key(cell_of(p))].push_back(id); }

  template <typename Fn>
  void for_neighbors(std::span<const double> p, Fn&& fn) const {
    const auto c = cell_of(p);
    std::vector<std::int64_t> probe(n_);
    const int total = static_cast<int>(std::pow(3, n_));
    for (int code = 0; code < total; ++code) {
      int rem = code;
      for (int i = 0; i < n_; ++i) {
        probe[i] = c[i] + (rem % 3) - 1;
        rem /= 3;
      }
      const auto it = buckets_.find(key(probe));
      if (it == buckets_.end()) continue;
      for (std::uint32_t id : it->second) fn(id);
    }
  }

 private:
  std::vector<std::int64_t> cell_of(std::span<const double> p) const {
    std::vector<std::int64_t> c(n_);
    for (int i = 0; i < n_; ++i) c[i] = static_cast<std::int64_t>(std::floor(p[i] / cell_));
    return c;
  }
  static std::uint64_t key(const std::vector<std::int64_t>& c) {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : c) {
      h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }

  int n_;
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

// Grid of spacing g on the faces of [-1, 1]^n, projected to the sphere. Any
// direction is within angle g sqrt(n - 1) / 2 of a candidate.
std::vector<double> cube_sphere_candidates(int n, double g) {
  const int m = static_cast<int>(std::ceil(2.0 / g));
  const double step = 2.0 / m;
  const double per_face = std::pow(m + 1.0, n - 1);
  if (2.0 * n * per_face > static_cast<double>(kMaxCandidates)) {
    throw PreconditionError("ball decomposition too fine for the candidate budget; lower level_max");
  }
  std::vector<double> out;
  std::vector<int> idx(n - 1, 0);
  std::vector<double> p(n);
  for (int axis = 0; axis < n; ++axis) {
    for (double sign : {-1.0, 1.0}) {
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        int k = 0;
        for (int i = 0; i < n; ++i) p[i] = i == axis ? sign : -1.0 + step * idx[k++];
        const double r = norm2(p);
        for (double v : p) out.push_back(v / r);
        int pos = 0;
        while (pos < n - 1 && ++idx[pos] > m) idx[pos++] = 0;
        if (pos == n - 1) break;
      }
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Half-space

bool WhitneyCube::contains(std::span<const double> z) const {
  if (static_cast<int>(z.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!(corner[i] <= z[i] && z[i] < corner[i] + side)) return false;
  }
  return true;
}

std::vector<double> WhitneyCube::center() const {
  std::vector<double> c = corner;
  for (double& v : c) v += 0.5 * side;
  return c;
}

double WhitneyCube::volume() const { return std::pow(side, dim()); }

WhitneyCube locate_cube(std::span<const double> z) {
  if (z.size() < 2) throw PreconditionError("half-space points need n + 1 >= 2 coordinates");
  const double s = z.back();
  if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("point outside the open half-space");
  WhitneyCube c;
  c.level = dyadic_floor(s);
  c.side = std::ldexp(1.0, c.level);
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    const auto k = static_cast<std::int64_t>(std::floor(z[i] / c.side));
    c.index.push_back(k);
    c.corner.push_back(static_cast<double>(k) * c.side);
  }
  c.corner.push_back(c.side);
  return c;
}

bool HalfBox::empty() const {
  for (int i = 0; i < dim(); ++i) {
    if (!(lo[i] < hi[i])) return true;
  }
  return dim() == 0;
}

std::vector<WhitneyCube> whitney_halfspace(const HalfBox& region, int level_min, int level_max) {
  if (region.lo.size() != region.hi.size() || region.lo.size() < 2) {
    throw PreconditionError("half-space boxes need n + 1 >= 2 matching bounds");
  }
  if (level_min > level_max) throw PreconditionError("level_min must not exceed level_max");
  if (region.empty()) return {};
  const int d = region.dim();
  const double s_lo = region.lo[d - 1], s_hi = region.hi[d - 1];
  if (!(s_lo >= std::ldexp(1.0, level_min)) || !(s_hi <= std::ldexp(1.0, level_max + 1))) {
    throw PreconditionError("box heights must lie in [2^level_min, 2^(level_max + 1))");
  }
  std::vector<WhitneyCube> out;
  for (int j = level_min; j <= level_max; ++j) {
    const double side = std::ldexp(1.0, j);
    if (!(side < s_hi && 2.0 * side > s_lo)) continue;
    std::vector<std::int64_t> first(d - 1), last(d - 1);
    double count = 1.0;
    for (int i = 0; i < d - 1; ++i) {
      first[i] = static_cast<std::int64_t>(std::floor(region.lo[i] / side));
      last[i] = static_cast<std::int64_t>(std::ceil(region.hi[i] / side)) - 1;
      count *= static_cast<double>(last[i] - first[i] + 1);
    }
    if (static_cast<double>(out.size()) + count > static_cast<double>(kMaxCubes)) {
      throw PreconditionError("too many Whitney cubes; shrink the box or the level range");
    }
    std::vector<std::int64_t> k = first;
    while (true) {
      WhitneyCube c;
      c.level = j;
      c.side = side;
      c.index = k;
      for (auto v : k) c.corner.push_back(static_cast<double>(v) * side);
      c.corner.push_back(side);
      out.push_back(std::move(c));
      int pos = d - 2;
      while (pos >= 0 && ++k[pos] > last[pos]) {
        k[pos] = first[pos];
        --pos;
      }
      if (pos < 0) break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ball

double BallCell::r_lo() const { return 1.0 - std::ldexp(1.0, -level); }
double BallCell::r_hi() const { return 1.0 - std::ldexp(1.0, -level - 1); }

bool BallCell::contains(std::span<const double> x) const {
  if (x.size() != cap_center.size()) return false;
  const double r = norm2(x);
  if (!(r >= r_lo() && r < r_hi())) return false;
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * cap_center[i];
  return std::acos(std::clamp(dot / r, -1.0, 1.0)) <= cap_radius;
}

double BallCell::diameter() const {
  const double a = r_lo(), b = r_hi();
  const double angle = std::min(2.0 * cap_radius, kPi);
  const double c = std::cos(angle);
  auto dist = [c](double u, double v) { return std::sqrt(std::max(0.0, u * u + v * v - 2.0 * u * v * c)); };
  return std::max({b - a, dist(a, a), dist(a, b), dist(b, b)});
}

namespace {

struct LevelLookup {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::shared_ptr<PointHash> hash;
};

std::vector<LevelLookup> build_lookups(const BallDecomposition& d) {
  std::vector<LevelLookup> out;
  std::size_t pos = 0;
  for (int j = 1; j <= d.level_max; ++j) {
    LevelLookup l;
    l.begin = pos;
    l.end = pos + d.cells_per_level[j - 1];
    const double cell = chord(std::ldexp(1.0, -j));
    l.hash = std::make_shared<PointHash>(d.n, cell);
    for (std::size_t i = l.begin; i < l.end; ++i) l.hash->insert(d.cells[i].cap_center, static_cast<std::uint32_t>(i));
    out.push_back(std::move(l));
    pos = out.back().end;
  }
  return out;
}

std::vector<std::size_t> containing(const BallDecomposition& d, const std::vector<LevelLookup>& lk,
                                    std::span<const double> x) {
  std::vector<std::size_t> out;
  if (static_cast<int>(x.size()) != d.n) return out;
  const double r = norm2(x);
  if (!(r >= 0.5 && r < 1.0)) return out;
  // 1 - r in (2^-(j+1), 2^-j] up to rounding; the neighbours settle ties.
  const int j = dyadic_floor(1.0 / (1.0 - r));
  std::vector<double> dir(x.begin(), x.end());
  for (double& v : dir) v /= r;
  for (int level = std::max(1, j - 1); level <= std::min(d.level_max, j + 1); ++level) {
    lk[level - 1].hash->for_neighbors(dir, [&](std::uint32_t id) {
      if (d.cells[id].contains(x)) out.push_back(id);
    });
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::size_t> BallDecomposition::cells_containing(std::span<const double> x) const {
  return containing(*this, build_lookups(*this), x);
}

BallDecomposition whitney_ball(int n, int level_max) {
  if (n < 2) throw PreconditionError("ball decompositions need n >= 2");
  if (level_max < 1) throw PreconditionError("level_max >= 1 is required");
  BallDecomposition d;
  d.n = n;
  d.level_max = level_max;
  for (int j = 1; j <= level_max; ++j) {
    const double radius = std::ldexp(1.0, -j);
    const double gap = radius / 8.0;   // candidate covering radius
    auto cand = cube_sphere_candidates(n, 2.0 * gap / std::sqrt(n - 1.0));
    const std::size_t count = cand.size() / n;
    std::vector<std::uint32_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::mt19937_64 gen(0);
    std::shuffle(order.begin(), order.end(), gen);
    // Centres pairwise farther apart than radius - gap, so every candidate
    // is within radius - gap of a centre and every direction within radius.
    const double sep = chord(radius - gap);
    PointHash hash(n, sep);
    std::vector<std::vector<double>> centres;
    for (std::uint32_t id : order) {
      std::span<const double> p(cand.data() + static_cast<std::size_t>(id) * n, n);
      bool free = true;
      hash.for_neighbors(p, [&](std::uint32_t c) {
        if (!free) return;
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += (p[i] - centres[c][i]) * (p[i] - centres[c][i]);
        if (std::sqrt(s) < sep) free = false;
      });
      if (!free) continue;
      hash.insert(p, static_cast<std::uint32_t>(centres.size()));
      centres.emplace_back(p.begin(), p.end());
    }
    d.cells_per_level.push_back(static_cast<int>(centres.size()));
    for (auto& c : centres) d.cells.push_back({j, std::move(c), radius});
  }
  d.c1 = HUGE_VAL;
  d.c2 = 0.0;
  for (const auto& c : d.cells) {
    const double diam = c.diameter();
    d.c1 = std::min(d.c1, diam / (1.0 - c.r_lo()));
    d.c2 = std::max(d.c2, diam / (1.0 - c.r_hi()));
  }
  const auto lk = build_lookups(d);
  std::mt19937_64 gen(0);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r_max = 1.0 - std::ldexp(1.0, -level_max - 1);
  std::vector<double> x(n);
  for (int s = 0; s < 10000; ++s) {
    double len = 0.0;
    for (double& v : x) {
      v = g(gen);
      len += v * v;
    }
    const double r = 0.5 + (r_max - 0.5) * u(gen);
    for (double& v : x) v *= r / std::sqrt(len);
    d.overlap = std::max(d.overlap, static_cast<int>(containing(d, lk, x).size()));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Comparison and export

DiscreteComparison discrete_vs_integral(const std::function<double(std::span<const double>)>& g, double gamma,
                                        std::span<const WhitneyCube> cubes, int points) {
  if (points < 1) throw PreconditionError("need at least one Gauss point");
  const LineRule ref = gauss_legendre(points);
  auto value = [&](std::span<const double> z) {
    const double v = g(z) * std::pow(z.back(), gamma);
    if (!std::isfinite(v) || v < 0.0) throw EvaluationError("field must be finite and nonnegative");
    return v;
  };
  struct Pair {
    double sum, integral;
  };
  const auto parts = parallel_map<Pair>(cubes.size(), [&](std::size_t c) {
    const auto& cube = cubes[c];
    const int d = cube.dim();
    const auto mid = cube.center();
    Pair out{value(mid) * cube.volume(), 0.0};
    std::vector<int> idx(d, 0);
    std::vector<double> z(d);
    const double half = 0.5 * cube.side;
    while (true) {
      double w = 1.0;
      for (int i = 0; i < d; ++i) {
        z[i] = mid[i] + half * ref.x[idx[i]];
        w *= half * ref.w[idx[i]];
      }
      out.integral += w * value(z);
      int pos = 0;
      while (pos < d && ++idx[pos] == points) idx[pos++] = 0;
      if (pos == d) break;
    }
    return out;
  });
  DiscreteComparison r;
  for (const auto& p : parts) {
    r.sum += p.sum;
    r.integral += p.integral;
  }
  r.ratio = r.integral > 0.0 ? r.sum / r.integral : (r.sum == 0.0 ? 1.0 : HUGE_VAL);
  return r;
}

void write_cubes_csv(std::ostream& os, std::span<const WhitneyCube> cubes, int n) {
  if (n < 0) n = cubes.empty() ? 0 : cubes.front().dim() - 1;
  os << "level";
  for (int i = 0; i < n; ++i) os << ",index" << i + 1;
  for (int i = 0; i < n; ++i) os << ",corner" << i + 1;
  os << ",height,side\n";
  for (const auto& c : cubes) {
    os << c.level;
    for (auto k : c.index) os << ',' << k;
    for (double v : c.corner) os << ',' << shortest(v);
    os << ',' << shortest(c.side) << '\n';
  }
}

void write_cells_csv(std::ostream& os, const BallDecomposition& d) {
  os << "level";
  for (int i = 0; i < d.n; ++i) os << ",center" << i + 1;
  os << ",cap_radius,r_lo,r_hi\n";
  for (const auto& c : d.cells) {
    os << c.level;
    for (double v : c.cap_center) os << ',' << shortest(v);
    os << ',' << shortest(c.cap_radius) << ',' << shortest(c.r_lo()) << ',' << shortest(c.r_hi()) << '\n';
  }
}

}  // namespace bergman
