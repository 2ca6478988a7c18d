// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line per criterion. Exit status 0 iff all pass.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bergman/distance.hpp"
#include "bergman/errors.hpp"
#include "bergman/verify.hpp"
#include "bergman/whitney.hpp"
#include "cli.hpp"

using namespace bergman;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, double time_limit, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit > 0.0) o.require(seconds <= time_limit, "runtime <= " + num(time_limit) + " s");
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-34s %s  (%.1f s)  %s\n", id, title, o.pass ? "PASS" : "FAIL", seconds,
              o.detail.c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

Outcome reproducing_identity() {
  Outcome o;
  double worst = 0.0;
  for (double beta : {0.0, 1.0, 2.0}) {
    for (const char* label : {"one", "x1", "x2", "solid_k1", "solid_k2", "solid_k3", "solid_k4"}) {
      const auto rep =
          verify_representation(gallery_function(label), KernelSpec::ball(3, beta), Hypothesis::bergman(2.0, 0.0));
      worst = std::max(worst, rep.max_ratio);
      o.require(rep.max_ratio <= 1e-4, std::string(label) + " beta " + num(beta) + " error <= 1e-4");
    }
  }
  // f = 1 against the exact value 1.
  const auto one = gallery_function("one");
  double one_err = 0.0;
  for (double beta : {0.0, 1.0, 2.0}) {
    for (const auto& x : default_representation_grid(Domain::ball, 3)) {
      one_err = std::max(one_err, std::abs(represent_ball(one, beta, x) - 1.0));
    }
  }
  o.require(one_err <= 1e-8, "f = 1 reproduced to 1e-8");
  o.note("max gallery error " + num(worst) + ", f = 1 error " + num(one_err));
  return o;
}

Outcome halfspace_representation() {
  Outcome o;
  const auto f = gallery_function("poisson_hs");
  for (int m : {1, 2}) {
    const auto rep = verify_representation(f, KernelSpec::halfspace(1, m), Hypothesis::bergman(3.0, 0.0));
    const double tail = rep.measure("relative_tail_bound");
    o.require(rep.samples.size() == 25, "5 x 5 grid");
    o.require(rep.max_ratio <= 1e-3 + tail, "m = " + std::to_string(m) + " error <= 1e-3 + tail");
    o.note("m = " + std::to_string(m) + ": error " + num(rep.max_ratio) + ", tail " + num(tail));
  }
  return o;
}

Outcome poisson_series() {
  Outcome o;
  const double r = 0.5;
  // Poisson kernel of the ball in R^3 at |x| = r on the axis of y': (1 - r^2)/(1 - r)^3.
  const double exact = (1.0 - r * r) / std::pow(1.0 - r, 3);
  const auto rep = verify_poisson_series(3, r);
  const double rate = rep.measure("rate");
  const double partial = rep.measure("partial_sum");
  o.require(std::abs(exact - 6.0) < 1e-15, "closed form 6");
  o.require(std::abs(rep.measure("limit") - exact) <= 1e-12, "library limit equals the closed form");
  o.require(std::abs(partial - exact) <= 1e-6 * exact, "partial sums converge to 6");
  o.require(std::abs(rate - 0.5) <= 0.05, "rate 0.5 +- 0.05");
  o.note("partial sum " + std::to_string(partial) + ", rate " + num(rate));
  return o;
}

Outcome radial_exact_case() {
  Outcome o;
  const std::vector<double> rho{0.0, 0.25, 0.5, 0.9, 0.99};
  const auto rep = verify_rro(0.0, 2.0, rho);
  o.require(rep.samples.size() == rho.size(), "one ratio per rho");
  double worst = 0.0;
  for (const auto& s : rep.samples) worst = std::max(worst, std::abs(s.value - 1.0));
  o.require(worst <= 1e-9, "ratio 1 to 1e-9");
  o.note("max |ratio - 1| = " + num(worst));
  return o;
}

Outcome power_laws() {
  Outcome o;
  const auto qb = verify_qbeta(3, 0.0, 4.0, 2.0, std::vector<double>{0.5, 0.9, 0.99});
  const double drift = qb.measure("approach_drift");
  o.require(drift <= 0.2, "qbeta ratio band within 20%");
  o.note("qbeta ratios");
  for (const auto& s : qb.samples) o.detail += " " + num(s.value);
  o.note("band " + num(drift));
  const std::vector<double> ts{1.0, 0.125, std::ldexp(1.0, -10)};
  struct Triple {
    int n;
    double delta, gamma;
    int m;
  };
  double worst = 0.0;
  for (const Triple& c : {Triple{1, 0.0, 4.0, 0}, Triple{1, 0.5, 5.0, 1}, Triple{2, -0.5, 4.0, 2}}) {
    const auto rep = verify_qm(c.n, c.delta, c.gamma, c.m, ts);
    const double err = rep.measure("scaling_error");
    worst = std::max(worst, err);
    o.require(err <= 1e-4, "qm scaling for n=" + std::to_string(c.n) + " m=" + std::to_string(c.m));
  }
  o.note("qm max scaling error " + num(worst));
  return o;
}

Outcome halfspace_kernel_constant() {
  Outcome o;
  double worst_drift = 0.0;
  for (int n : {1, 2}) {
    for (int m = 0; m <= 3; ++m) {
      const auto rep = verify_kernel_bounds(KernelSpec::halfspace(n, m), KernelBound::halfspace);
      const std::string tag = "n=" + std::to_string(n) + " m=" + std::to_string(m);
      o.require(std::isfinite(rep.max_ratio), tag + " finite");
      o.require(rep.grid_refinement_drift <= 0.1, tag + " drift <= 10%");
      worst_drift = std::max(worst_drift, rep.grid_refinement_drift);
    }
  }
  // n = 1, m = 0 at x = y: Q_0 = (2/pi) / (s + t)^2, so the ratio is 2/pi.
  const auto aligned = verify_kernel_bounds(KernelSpec::halfspace(1, 0), KernelBound::halfspace);
  const double spot = aligned.measure("aligned_value");
  o.require(std::abs(spot - 2.0 / kPi) <= 1e-12, "aligned value 2/pi to 1e-12");
  o.note("max drift " + num(worst_drift) + ", aligned |value - 2/pi| = " + num(std::abs(spot - 2.0 / kPi)));
  return o;
}

// The Poisson experiment is shared by criteria 7 and 8.
const DistanceReport& poisson_experiment() {
  static const DistanceReport rep = [] {
    NormSpec target;
    target.p = 2.0;
    target.alpha = 1.0;
    return equivalence_experiment(gallery_function("poisson_e1"), target, {2.0, 3.0, 4.0});
  }();
  return rep;
}

bool in_band(const DistanceReport& rep, double eps) {
  const ExperimentOptions defaults;
  const double S = rep.weighted_sup;
  return eps >= defaults.band_lo * S * (1 - 1e-12) && eps <= defaults.band_hi * S * (1 + 1e-12);
}

Outcome distance_signatures() {
  Outcome o;
  // (a) a member function.
  NormSpec target;
  target.p = 2.0;
  target.alpha = 1.0;
  const auto member = equivalence_experiment(gallery_function("solid_k2"), target, {2.0});
  const auto& mrun = member.runs.at(0);
  o.require(mrun.bracket_lo == 0.0, "member bracket contains 0");
  double prev = 0.0;
  int with_s1 = 0;
  for (const auto& row : mrun.rows) {
    if (!row.s1_upper) continue;
    ++with_s1;
    o.require(*row.s1_upper >= prev, "member s1_upper nondecreasing in eps");
    prev = *row.s1_upper;
  }
  o.require(with_s1 >= 2, "member s1_upper reported");
  o.note("(a) bracket [0, " + num(mrun.bracket_hi) + "], s1_upper at " + std::to_string(with_s1) + " eps");

  // (b) P(., e_1) with lambda = n - 1 at eps = 0.1 and 3.
  const auto f = gallery_function("poisson_e1");
  const auto& rep = poisson_experiment();
  o.require(std::abs(rep.lambda - 2.0) < 1e-12, "lambda = n - 1");
  for (double beta : {2.0, 3.0, 4.0}) {
    const KernelSpec kernel = KernelSpec::ball(3, beta);
    const auto lo = s2_profile(f, {0.1, rep.lambda}, kernel, 2.0, 1.0).classification;
    const auto hi = s2_profile(f, {3.0, rep.lambda}, kernel, 2.0, 1.0).classification;
    o.require(lo == Classification::divergent, "DIVERGENT at eps = 0.1, beta " + num(beta));
    o.require(hi == Classification::finite, "FINITE at eps = 3, beta " + num(beta));
  }
  // (c) f1_sup / eps over eps in [0.25, 1.5] and all beta.
  double lo = HUGE_VAL, hi = 0.0;
  for (const auto& run : rep.runs) {
    o.require(run.coherent, "coherent classification, beta " + num(run.kernel_param));
    for (const auto& row : run.rows) {
      if (!in_band(rep, row.eps)) continue;
      lo = std::min(lo, row.f1_sup / row.eps);
      hi = std::max(hi, row.f1_sup / row.eps);
    }
  }
  o.require(hi > 0.0 && hi <= 10.0 * lo, "f1_sup / eps within a factor 10");
  o.note("(b) weighted sup " + num(rep.weighted_sup) + "; (c) band [" + num(lo) + ", " + num(hi) + "]");
  return o;
}

Outcome decomposition_contract() {
  Outcome o;
  const auto& rep = poisson_experiment();
  double worst = 0.0;
  for (const auto& run : rep.runs) {
    double lo = HUGE_VAL, hi = 0.0;
    for (const auto& row : run.rows) {
      worst = std::max(worst, row.reproduction_error);
      if (!in_band(rep, row.eps)) continue;
      lo = std::min(lo, row.f1_sup / row.eps);
      hi = std::max(hi, row.f1_sup / row.eps);
    }
    const double spread = (hi - lo) / (hi + lo);
    o.require(spread <= 0.2, "f1_sup / eps within 20% of the band centre, beta " + num(run.kernel_param));
    o.note("beta " + num(run.kernel_param) + " [" + num(lo) + ", " + num(hi) + "]");
  }
  o.require(worst <= 1e-4, "reproduction error <= 1e-4");
  o.note("max reproduction error " + num(worst));
  return o;
}

bool interiors_meet(const WhitneyCube& a, const WhitneyCube& b) {
  for (int i = 0; i < a.dim(); ++i) {
    if (!(a.corner[i] < b.corner[i] + b.side && b.corner[i] < a.corner[i] + a.side)) return false;
  }
  return true;
}

Outcome whitney_properties() {
  Outcome o;
  for (int L = 1; L <= 12; ++L) {
    const auto cubes = whitney_halfspace({{0.0, std::ldexp(1.0, -L)}, {1.0, 1.0}}, -L, -1);
    o.require(cubes.size() == (std::size_t{1} << (L + 1)) - 2, "count 2^(L+1) - 2 at L = " + std::to_string(L));
  }
  // Exact cover of a box: pairwise disjoint, every dyadic sample in exactly
  // one cube, and that cube's side within [height/2, height].
  const HalfBox box{{-1.0, 0.125}, {1.5, 4.0}};
  const auto cubes = whitney_halfspace(box, -3, 1);
  bool disjoint = true;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    o.require(cubes[i].corner.back() == cubes[i].side, "heights start at the side");
    for (std::size_t j = i + 1; j < cubes.size(); ++j) disjoint = disjoint && !interiors_meet(cubes[i], cubes[j]);
  }
  o.require(disjoint, "disjoint");
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<std::int64_t> ky(-(1 << 20), (3 << 19) - 1), ks(1 << 17, (4 << 20) - 1);
  bool once = true, band = true;
  for (int s = 0; s < 20000; ++s) {
    const std::vector<double> z{std::ldexp(static_cast<double>(ky(gen)), -20),
                                std::ldexp(static_cast<double>(ks(gen)), -20)};
    int hits = 0;
    for (const auto& c : cubes) {
      if (!c.contains(z)) continue;
      ++hits;
      band = band && c.side <= z[1] && z[1] < 2.0 * c.side;
    }
    once = once && hits == 1;
  }
  o.require(once, "every sample in exactly one cube");
  o.require(band, "height / side in [1, 2)");

  double lo = HUGE_VAL, hi = 0.0;
  for (int n : {1, 2}) {
    const double R = n == 1 ? 8.0 : 4.0;
    const int depth = n == 1 ? 6 : 4;
    HalfBox b;
    b.lo.assign(n, -R);
    b.hi.assign(n, R);
    b.lo.push_back(std::ldexp(1.0, -depth));
    b.hi.push_back(8.0);
    const auto cs = whitney_halfspace(b, -depth, 2);
    for (const auto& f : gallery(3, n)) {
      if (f.domain != Domain::halfspace) continue;
      for (double p : {1.0, 2.0}) {
        for (double gamma : {0.0, 1.0}) {
          const auto r = discrete_vs_integral(
              [&](std::span<const double> z) { return std::pow(std::abs(f(z)), p); }, gamma, cs);
          lo = std::min(lo, r.ratio);
          hi = std::max(hi, r.ratio);
        }
      }
    }
  }
  o.require(lo >= 0.5 && hi <= 2.0, "discrete / integral within [1/2, 2]");
  o.note("discrete / integral in [" + num(lo) + ", " + num(hi) + "]");
  return o;
}

Outcome weighted_representation() {
  Outcome o;
  const auto f = gallery_function("poisson_e1");
  const SWeight v = SWeight::power(0.5);
  const auto rep = verify_representation(f, KernelSpec::ball(3, 2.0), Hypothesis::weighted(1.0, v));
  o.require(rep.pass && rep.max_ratio <= 1e-3, "admissible alpha reproduces to 1e-3");
  o.note("error " + num(rep.max_ratio));
  try {
    verify_representation(f, KernelSpec::ball(3, 1.0), Hypothesis::weighted(1.0, v));
    o.require(false, "inadmissible alpha refused");
  } catch (const PreconditionError& e) {
    o.require(std::string(e.what()).find("alpha > s(v, p)") != std::string::npos, "refusal names alpha > s(v, p)");
    o.note(std::string("refused: ") + e.what());
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("bergman_acceptance_" + std::to_string(::getpid()));
  const std::vector<std::vector<std::string>> commands{
      {"whitney", "--domain", "ball", "--n", "3", "--levels", "3", "--out", "wb"},
      {"whitney", "--domain", "halfspace", "--levels", "6", "--out", "wh"},
      {"verify", "--lemma", "rro", "--alpha", "0", "--lambda", "2", "--out", "rro"},
      {"verify", "--lemma", "kernel", "--domain", "halfspace", "--m", "0,1", "--samples", "1024", "--out", "kb"},
      {"verify", "--lemma", "qm", "--m", "1", "--out", "qm"},
      {"norms", "--n", "3", "--alpha", "0,1", "--out", "norms"},
      {"distance", "--domain", "halfspace", "--f", "qm_w0", "--m", "1", "--out", "dist"},
  };
  for (const char* run : {"a", "b"}) {
    // The second pass caps the worker count.
    if (std::string(run) == "b") ::setenv("BERGMAN_LAB_THREADS", "1", 1);
    for (auto args : commands) {
      args.back() = (root / run / args.back()).string();
      std::ostringstream sink;
      const int code = cli::run(args, sink, sink);
      o.require(code == cli::exit_pass, args[0] + " exit 0 (got " + std::to_string(code) + ")");
    }
  }
  ::unsetenv("BERGMAN_LAB_THREADS");
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    const auto ext = entry.path().extension();
    if (ext != ".csv" && ext != ".dat") continue;
    const fs::path other = root / "b" / entry.path().filename();
    o.require(fs::exists(other) && slurp(entry.path()) == slurp(other),
              entry.path().filename().string() + " byte-identical");
    ++compared;
  }
  o.require(compared >= 8, "all CSV outputs compared");
  o.note(std::to_string(compared) + " files byte-identical");
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  criterion(1, "reproducing identity (ball)", 120.0, reproducing_identity);
  criterion(2, "half-space representation", 300.0, halfspace_representation);
  criterion(3, "Poisson series", 0.0, poisson_series);
  criterion(4, "radial integral exact case", 0.0, radial_exact_case);
  criterion(5, "kernel power laws", 0.0, power_laws);
  criterion(6, "half-space kernel constant", 0.0, halfspace_kernel_constant);
  criterion(7, "distance signatures", 900.0, distance_signatures);
  criterion(8, "decomposition contract", 0.0, decomposition_contract);
  criterion(9, "Whitney decomposition", 0.0, whitney_properties);
  criterion(10, "weighted representation", 0.0, weighted_representation);
  criterion(11, "determinism", 0.0, determinism);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
