#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

#include "CLI11.hpp"
#include "bergman/distance.hpp"
#include "bergman/errors.hpp"
#include "bergman/format.hpp"
#include "bergman/parallel.hpp"
#include "bergman/spaces.hpp"
#include "bergman/verify.hpp"
#include "bergman/whitney.hpp"

namespace bergman::cli {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchema = "1";
constexpr const char* kBallConventions =
    "ball: dV = n r^(n-1) dr dsigma (mass 1); sigma normalized";

// ---------------------------------------------------------------------------
// Parsing helpers

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError(what + ": not a number: '" + s + "'");
  return v;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(parse_double(tok, what));
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (const auto& tok : split(s, ',')) {
    const double v = parse_double(tok, what);
    if (v != std::floor(v) || std::abs(v) > 1e6) throw UsageError(what + ": not an integer: '" + tok + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

Domain parse_domain(const std::string& s) {
  if (s == "ball") return Domain::ball;
  if (s == "halfspace") return Domain::halfspace;
  throw UsageError("--domain must be ball or halfspace, got '" + s + "'");
}

std::optional<SWeight> parse_weight(const std::string& s, Domain domain) {
  if (s.empty() || s == "none") return std::nullopt;
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const auto args = colon == std::string::npos ? std::vector<double>{} : parse_doubles(s.substr(colon + 1), "--weight");
  const double domain_max = domain == Domain::ball ? 1.0 : std::numeric_limits<double>::infinity();
  if (kind == "power" && args.size() == 1) return SWeight::power(args[0], 0.5, domain_max);
  if (kind == "log_power" && args.size() == 2) {
    if (domain != Domain::ball) throw UsageError("log_power weights are defined on the ball only");
    return SWeight::log_power(args[0], args[1]);
  }
  throw UsageError("--weight must be none, power:a or log_power:a,b, got '" + s + "'");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string join_doubles(const std::vector<double>& v, char sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += shortest(v[i]);
  }
  return s;
}

std::string joined_pairs(const std::vector<std::pair<std::string, double>>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += v[i].first + "=" + shortest(v[i].second);
  }
  return s;
}

json pairs_json(const std::vector<std::pair<std::string, double>>& v) {
  json j = json::object();
  for (const auto& [k, x] : v) j[k] = x;
  return j;
}

std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

void write_json(const std::string& path, const json& j) {
  auto os = open_output(path);
  os << j.dump(2) << '\n';
}

json envelope(const RunConfig& config) {
  json j;
  j["schema"] = kSchema;
  j["command"] = config.command;
  j["config"] = config.to_json();
  return j;
}

// ---------------------------------------------------------------------------
// verify

struct Job {
  std::string label;
  std::function<LemmaReport()> run;
};

const std::vector<std::string>& polynomial_labels() {
  static const std::vector<std::string> labels{"one", "x1", "x2", "solid_k1", "solid_k2", "solid_k3", "solid_k4"};
  return labels;
}

std::vector<double> grid_or(const RunConfig& c, std::vector<double> fallback) {
  return c.grid.empty() ? fallback : c.grid;
}

KernelBound parse_part(const std::string& s) {
  if (s == "pointwise") return KernelBound::pointwise;
  if (s == "sphere_mean") return KernelBound::sphere_mean;
  if (s == "sphere_power") return KernelBound::sphere_power;
  if (s == "halfspace") return KernelBound::halfspace;
  throw UsageError("--part must be pointwise, sphere_mean, sphere_power or halfspace, got '" + s + "'");
}

void add_rro(std::vector<Job>& jobs, double alpha, double lambda, std::vector<double> rho) {
  jobs.push_back({"rro", [=] { return verify_rro(alpha, lambda, rho); }});
}

void add_kernel(std::vector<Job>& jobs, KernelSpec spec, KernelBound part, int samples) {
  jobs.push_back({std::string("kernel_bound ") + to_string(part),
                  [=] { return verify_kernel_bounds(spec, part, samples); }});
}

void add_representation(std::vector<Job>& jobs, const std::string& label, const KernelSpec& spec,
                        const Hypothesis& hypothesis, int n_ball, int n_half) {
  const auto f = gallery_function(label, n_ball, n_half);
  jobs.push_back({"representation " + label, [=] { return verify_representation(f, spec, hypothesis); }});
}

// The fixed battery behind --suite all.
std::vector<Job> suite_jobs(const RunConfig& c) {
  std::vector<Job> jobs;
  const int n = c.n, nh = c.n_half;
  const std::vector<double> rho{0.0, 0.25, 0.5, 0.9, 0.99};
  add_rro(jobs, 0.0, 2.0, rho);
  add_rro(jobs, 1.0, 3.0, rho);
  jobs.push_back({"qbeta", [=] { return verify_qbeta(n, 0.0, n + 1.0, 2.0, std::vector<double>{0.5, 0.9, 0.99}); }});
  const std::vector<double> ts{1.0, 0.125, std::ldexp(1.0, -10)};
  for (auto [delta, extra, m] : {std::tuple{0.0, 3.0, 0}, std::tuple{0.5, 4.0, 1}, std::tuple{-0.5, 3.0, 2}}) {
    jobs.push_back({"qm", [=] { return verify_qm(nh, delta, nh + extra + delta, m, ts); }});
  }
  add_kernel(jobs, KernelSpec::ball(n, 1.0), KernelBound::pointwise, c.samples);
  add_kernel(jobs, KernelSpec::ball(n, 1.0), KernelBound::sphere_mean, std::min(c.samples, 1024));
  add_kernel(jobs, KernelSpec::ball(n, n), KernelBound::sphere_power, std::min(c.samples, 1024));
  for (int m = 0; m <= 3; ++m) add_kernel(jobs, KernelSpec::halfspace(nh, m), KernelBound::halfspace, c.samples);
  jobs.push_back({"poisson_series", [=] { return verify_poisson_series(n, 0.5); }});
  for (double beta : {0.0, 1.0, 2.0}) {
    for (const auto& label : polynomial_labels()) {
      add_representation(jobs, label, KernelSpec::ball(n, beta), Hypothesis::bergman(2.0, 0.0), n, nh);
    }
  }
  for (int m : {1, 2}) {
    add_representation(jobs, "poisson_hs", KernelSpec::halfspace(nh, m), Hypothesis::bergman(3.0, 0.0), n, nh);
  }
  add_representation(jobs, "poisson_e1", KernelSpec::ball(n, 2.0), Hypothesis::weighted(1.0, SWeight::power(0.5)), n,
                     nh);
  return jobs;
}

std::vector<Job> lemma_jobs(const RunConfig& c) {
  std::vector<Job> jobs;
  const Domain domain = parse_domain(c.domain);
  const std::string& lemma = c.lemma;
  if (lemma == "rro") {
    add_rro(jobs, c.alpha, c.lambda, grid_or(c, {0.0, 0.25, 0.5, 0.9, 0.99}));
  } else if (lemma == "qbeta") {
    const double gamma = c.gamma.value_or(c.n + c.delta + 1.0);
    const auto rs = grid_or(c, {0.5, 0.9, 0.99});
    for (double beta : c.beta.empty() ? std::vector<double>{2.0} : c.beta) {
      jobs.push_back({"qbeta", [=, n = c.n, delta = c.delta] { return verify_qbeta(n, delta, gamma, beta, rs); }});
    }
  } else if (lemma == "qm") {
    const double gamma = c.gamma.value_or(c.n_half + c.delta + 3.0);
    const auto ts = grid_or(c, {1.0, 0.125, std::ldexp(1.0, -10)});
    for (int m : c.m.empty() ? std::vector<int>{0} : c.m) {
      jobs.push_back({"qm", [=, n = c.n_half, delta = c.delta] { return verify_qm(n, delta, gamma, m, ts); }});
    }
  } else if (lemma == "kernel") {
    std::vector<KernelBound> parts;
    if (!c.part.empty()) {
      parts.push_back(parse_part(c.part));
    } else if (domain == Domain::ball) {
      parts = {KernelBound::pointwise, KernelBound::sphere_mean, KernelBound::sphere_power};
    } else {
      parts = {KernelBound::halfspace};
    }
    for (KernelBound part : parts) {
      if (part == KernelBound::halfspace) {
        for (int m : c.m.empty() ? std::vector<int>{0, 1, 2, 3} : c.m) {
          add_kernel(jobs, KernelSpec::halfspace(c.n_half, m), part, c.samples);
        }
      } else {
        const double fallback = part == KernelBound::sphere_power ? c.n : 1.0;
        for (double beta : c.beta.empty() ? std::vector<double>{fallback} : c.beta) {
          add_kernel(jobs, KernelSpec::ball(c.n, beta), part, c.samples);
        }
      }
    }
  } else if (lemma == "poisson") {
    jobs.push_back({"poisson_series", [=, n = c.n, r = c.r, t = c.t, k = c.k_max] {
                      return verify_poisson_series(n, r, t, k);
                    }});
  } else if (lemma == "representation") {
    const auto weight = parse_weight(c.weight, domain);
    const Hypothesis hyp = weight ? Hypothesis::weighted(c.p, *weight) : Hypothesis::bergman(c.p, c.alpha);
    std::vector<std::string> labels = split(c.function, ',');
    if (labels.empty()) {
      labels = domain == Domain::ball ? polynomial_labels() : std::vector<std::string>{"poisson_hs"};
    }
    for (const auto& label : labels) {
      if (domain == Domain::ball) {
        for (double beta : c.beta.empty() ? std::vector<double>{1.0} : c.beta) {
          add_representation(jobs, label, KernelSpec::ball(c.n, beta), hyp, c.n, c.n_half);
        }
      } else {
        for (int m : c.m.empty() ? std::vector<int>{1} : c.m) {
          add_representation(jobs, label, KernelSpec::halfspace(c.n_half, m), hyp, c.n, c.n_half);
        }
      }
    }
  } else {
    throw UsageError("--lemma must be rro, qbeta, qm, kernel, poisson or representation, got '" + lemma + "'");
  }
  return jobs;
}

json report_json(const std::string& label, const LemmaReport& r) {
  json j;
  j["lemma_id"] = r.lemma_id;
  j["job"] = label;
  j["parameter_point"] = pairs_json(r.parameter_point);
  j["max_ratio"] = r.max_ratio;
  j["grid_refinement_drift"] = r.grid_refinement_drift;
  j["drift_threshold"] = r.drift_threshold;
  j["measures"] = pairs_json(r.measures);
  j["verdict"] = to_string(r.verdict);
  j["pass"] = r.pass;
  j["notes"] = r.notes;
  json samples = json::array();
  for (const auto& s : r.samples) samples.push_back({{"at", s.at}, {"value", s.value}});
  j["samples"] = std::move(samples);
  return j;
}

// ---------------------------------------------------------------------------
// distance

const char* kernel_name(Domain d) { return d == Domain::ball ? "beta" : "m"; }

json profile_json(const DivergenceProfile& p) {
  json j;
  j["classification"] = to_string(p.classification);
  j["cutoffs"] = p.cutoffs;
  j["values"] = p.values;
  j["fitted_exponent"] = p.fitted_exponent;
  j["estimate"] = p.estimate;
  j["tail_estimate"] = p.tail_estimate;
  j["note"] = p.note;
  return j;
}

json distance_json(const DistanceReport& rep) {
  json j;
  j["function"] = rep.function;
  j["domain"] = to_string(rep.domain);
  j["n"] = rep.n;
  j["target"] = {{"scale", to_string(rep.target.scale)},
                 {"p", rep.target.p},
                 {"q", optional_json(rep.target.q)},
                 {"alpha", rep.target.alpha}};
  j["lambda"] = rep.lambda;
  j["weighted_sup"] = rep.weighted_sup;
  json runs = json::array();
  for (const auto& run : rep.runs) {
    json r;
    r[kernel_name(rep.domain)] = run.kernel_param;
    r["bracket"] = {run.bracket_lo, run.bracket_hi};
    r["coherent"] = run.coherent;
    r["monotone"] = run.monotone;
    r["f1_sup_over_eps_band"] = {run.ratio_lo, run.ratio_hi};
    r["note"] = run.note;
    json rows = json::array();
    for (const auto& row : run.rows) {
      json e;
      e["eps"] = row.eps;
      e["empty_level_set"] = row.empty_level_set;
      e["profile"] = profile_json(row.profile);
      e["f1_sup"] = row.f1_sup;
      e["f1_witness"] = row.f1_witness;
      e["s1_upper"] = optional_json(row.s1_upper);
      e["target_norm"] = optional_json(row.target_norm);
      e["reproduction_error"] = row.reproduction_error;
      e["note"] = row.note;
      rows.push_back(std::move(e));
    }
    r["rows"] = std::move(rows);
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  j["notes"] = rep.notes;
  return j;
}

std::string optional_text(const std::optional<double>& v) { return v ? shortest(*v) : std::string(); }

// ---------------------------------------------------------------------------
// norms

struct NormColumn {
  std::string name;
  std::function<NormResult(const HarmonicFn&)> eval;
};

// ---------------------------------------------------------------------------
// whitney

// Uniform double in [lo, hi) from the top 53 bits of the generator.
double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * std::ldexp(static_cast<double>(gen() >> 11), -53);
}

bool cube_less(const WhitneyCube& a, const WhitneyCube& b) {
  return a.level != b.level ? a.level < b.level : a.index < b.index;
}

bool interiors_meet(const WhitneyCube& a, const WhitneyCube& b) {
  for (int i = 0; i < a.dim(); ++i) {
    if (!(a.corner[i] < b.corner[i] + b.side && b.corner[i] < a.corner[i] + a.side)) return false;
  }
  return true;
}

int whitney_halfspace_cmd(const RunConfig& c, std::ostream& out) {
  const int n = c.n_half;
  HalfBox box;
  int lmin = 0, lmax = 0;
  if (c.lo.empty() && c.hi.empty()) {
    if (!c.levels) throw UsageError("whitney on the half-space needs --levels or a box (--lo, --hi)");
    if (*c.levels < 1) throw UsageError("--levels must be at least 1");
    box.lo.assign(n, 0.0);
    box.hi.assign(n, 1.0);
    box.lo.push_back(std::ldexp(1.0, -*c.levels));
    box.hi.push_back(1.0);
    lmin = -*c.levels;
    lmax = -1;
  } else {
    if (static_cast<int>(c.lo.size()) != n + 1 || static_cast<int>(c.hi.size()) != n + 1) {
      throw UsageError("--lo and --hi need n_half + 1 = " + std::to_string(n + 1) + " coordinates");
    }
    box.lo = c.lo;
    box.hi = c.hi;
    if (!box.empty()) {
      if (!(box.lo.back() > 0.0)) throw UsageError("the box must lie in the open half-space (lowest height > 0)");
      lmin = c.level_min.value_or(static_cast<int>(std::floor(std::log2(box.lo.back()))));
      lmax = c.level_max.value_or(static_cast<int>(std::ceil(std::log2(box.hi.back()))) - 1);
    }
  }
  const auto cubes = box.empty() ? std::vector<WhitneyCube>{} : whitney_halfspace(box, lmin, lmax);

  // Cover and overlap on sampled points: the containing cube of the dyadic
  // grid is unique, so its multiplicity in the list is the overlap there.
  const int sample_count = box.empty() ? 0 : 10000;
  std::mt19937_64 gen(c.seed);
  int covered = 0, overlap = 0;
  double band_lo = HUGE_VAL, band_hi = 0.0;
  for (int s = 0; s < sample_count; ++s) {
    std::vector<double> z(n + 1);
    for (int i = 0; i <= n; ++i) z[i] = uniform(gen, box.lo[i], box.hi[i]);
    const auto own = locate_cube(z);
    const auto [a, b] = std::equal_range(cubes.begin(), cubes.end(), own, cube_less);
    const int hits = static_cast<int>(b - a);
    overlap = std::max(overlap, hits);
    if (hits > 0) {
      ++covered;
      const double ratio = z.back() / own.side;
      band_lo = std::min(band_lo, ratio);
      band_hi = std::max(band_hi, ratio);
    }
  }
  bool disjoint = true;
  const bool pairwise = cubes.size() <= 4096;
  if (pairwise) {
    for (std::size_t i = 0; i < cubes.size() && disjoint; ++i) {
      for (std::size_t j = i + 1; j < cubes.size(); ++j) {
        if (interiors_meet(cubes[i], cubes[j])) {
          disjoint = false;
          break;
        }
      }
    }
  }
  const double cover = sample_count ? 100.0 * covered / sample_count : 100.0;
  const bool band_ok = covered == 0 || (band_lo >= 1.0 && band_hi < 2.0);
  const bool ok = disjoint && overlap <= 1 && covered == sample_count && band_ok;

  const std::string prefix = c.out_prefix();
  {
    auto os = open_output(prefix + "_cubes.csv");
    os << "# Whitney cubes of R^" << n + 1 << "_+: side 2^level, heights [side, 2 side); last coordinate is the height\n";
    write_cubes_csv(os, cubes, n);
  }
  json j = envelope(c);
  j["domain"] = "halfspace";
  j["box"] = {{"lo", box.lo}, {"hi", box.hi}};
  j["level_min"] = lmin;
  j["level_max"] = lmax;
  j["cube_count"] = cubes.size();
  j["samples"] = sample_count;
  j["cover_percent"] = cover;
  j["max_overlap"] = overlap;
  j["disjoint_pairwise"] = pairwise ? json(disjoint) : json(nullptr);
  j["height_over_side"] = covered ? json{band_lo, band_hi} : json(nullptr);
  j["pass"] = ok;
  write_json(prefix + ".json", j);

  out << "cubes " << cubes.size() << "  levels [" << lmin << ", " << lmax << "]\n";
  out << "cover " << shortest(cover) << "%  max overlap " << overlap << "  disjoint "
      << (pairwise ? (disjoint ? "yes" : "NO") : "not checked") << '\n';
  if (covered) out << "height/side band [" << shortest(band_lo) << ", " << shortest(band_hi) << "] within [1, 2)\n";
  out << (ok ? "PASS" : "FAIL") << '\n';
  return ok ? exit_pass : exit_fail;
}

int whitney_ball_cmd(const RunConfig& c, std::ostream& out) {
  const int levels = c.levels.value_or(3);
  const auto d = whitney_ball(c.n, levels);
  const std::string prefix = c.out_prefix();
  {
    auto os = open_output(prefix + "_cells.csv");
    os << "# ball cells {1-2^-j <= |x| < 1-2^-(j+1)} x caps of angular radius cap_radius; n=" << c.n
       << " c1=" << shortest(d.c1) << " c2=" << shortest(d.c2) << " overlap=" << d.overlap << '\n';
    write_cells_csv(os, d);
  }
  json j = envelope(c);
  j["domain"] = "ball";
  j["n"] = d.n;
  j["level_max"] = d.level_max;
  j["cell_count"] = d.cells.size();
  j["cells_per_level"] = d.cells_per_level;
  j["c1"] = d.c1;
  j["c2"] = d.c2;
  j["overlap"] = d.overlap;
  write_json(prefix + ".json", j);
  out << "cells " << d.cells.size() << " over " << levels << " levels (";
  for (std::size_t i = 0; i < d.cells_per_level.size(); ++i) out << (i ? ", " : "") << d.cells_per_level[i];
  out << ")\n";
  out << "diameter / boundary distance in [" << shortest(d.c1) << ", " << shortest(d.c2) << "], overlap "
      << d.overlap << '\n';
  return exit_pass;
}

// ---------------------------------------------------------------------------
// Command-line definition

struct Raw {
  std::string beta, m, alphas, grid, eps, lo, hi;
  double q = 0.0, gamma = 0.0;
  int outer_levels = 0, levels = 0, level_min = 0, level_max = 0;
};

void add_common(CLI::App* sub, RunConfig& c) {
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  sub->add_option("--n", c.n, "ball dimension")->capture_default_str();
  sub->add_option("--n-half", c.n_half, "half-space boundary dimension")->capture_default_str();
  sub->add_option("--out", c.out, "output file prefix (default: the command name)");
  sub->add_option("--seed", c.seed, "sampling seed")->capture_default_str();
  sub->add_option("--config", c.config_file, "key=value file; flags given on the command line win");
}

void add_domain(CLI::App* sub, RunConfig& c) {
  sub->add_option("--domain", c.domain, "ball or halfspace")->capture_default_str();
}

// Splices the config file tokens after the subcommand so that later
// command-line flags override them.
std::vector<std::string> with_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  const auto tokens = read_config_file(path);
  std::vector<std::string> out;
  bool spliced = false;
  for (const auto& a : args) {
    out.push_back(a);
    if (!spliced && !a.empty() && a[0] != '-') {
      out.insert(out.end(), tokens.begin(), tokens.end());
      spliced = true;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["lemma"] = lemma;
  j["suite"] = suite;
  j["part"] = part;
  j["domain"] = domain;
  j["function"] = function;
  j["n"] = n;
  j["n_half"] = n_half;
  j["beta"] = beta;
  j["m"] = m;
  j["p"] = p;
  j["q"] = optional_json(q);
  j["alpha"] = alpha;
  j["alphas"] = alphas;
  j["lambda"] = lambda;
  j["delta"] = delta;
  j["gamma"] = optional_json(gamma);
  j["r"] = r;
  j["t"] = t;
  j["k_max"] = k_max;
  j["samples"] = samples;
  j["grid"] = grid;
  j["weight"] = weight;
  j["scale"] = scale;
  j["eps"] = eps;
  j["outer_levels"] = outer_levels ? json(*outer_levels) : json(nullptr);
  j["levels"] = levels ? json(*levels) : json(nullptr);
  j["level_min"] = level_min ? json(*level_min) : json(nullptr);
  j["level_max"] = level_max ? json(*level_max) : json(nullptr);
  j["lo"] = lo;
  j["hi"] = hi;
  j["out"] = out_prefix();
  j["seed"] = seed;
  j["config_file"] = config_file;
  return j;
}

std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key == "config") continue;
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return tokens;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  std::vector<Job> jobs;
  if (c.suite == "all") {
    jobs = suite_jobs(c);
  } else if (!c.suite.empty()) {
    throw UsageError("--suite must be 'all', got '" + c.suite + "'");
  } else if (c.lemma.empty()) {
    throw UsageError("verify needs --lemma or --suite all");
  } else {
    jobs = lemma_jobs(c);
  }
  auto reports = parallel_map<LemmaReport>(jobs.size(), [&](std::size_t i) { return jobs[i].run(); });

  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return reports[a].lemma_id < reports[b].lemma_id; });

  bool any_fail = false, any_inconclusive = false;
  json list = json::array();
  const std::string prefix = c.out_prefix();
  auto csv = open_output(prefix + ".csv");
  csv << "# value: ratio to the bound, or relative error (representation); " << kBallConventions
      << "; half-space: dy dt\n";
  csv << "lemma_id,job,parameters,at,value,max_ratio,grid_refinement_drift,verdict\n";
  for (std::size_t i : order) {
    const auto& r = reports[i];
    any_fail = any_fail || r.verdict == Verdict::fail;
    any_inconclusive = any_inconclusive || r.verdict == Verdict::inconclusive;
    list.push_back(report_json(jobs[i].label, r));
    for (const auto& s : r.samples) {
      csv << r.lemma_id << ',' << jobs[i].label << ',' << joined_pairs(r.parameter_point) << ','
          << join_doubles(s.at, ';') << ',' << shortest(s.value) << ',' << shortest(r.max_ratio) << ','
          << shortest(r.grid_refinement_drift) << ',' << to_string(r.verdict) << '\n';
    }
    char line[64];
    std::snprintf(line, sizeof line, "  max %.6g  drift %.3g  ", r.max_ratio, r.grid_refinement_drift);
    out << jobs[i].label << " [" << joined_pairs(r.parameter_point) << "]" << line << to_string(r.verdict) << '\n';
  }
  const int status = any_fail ? exit_fail : any_inconclusive ? exit_inconclusive : exit_pass;
  json j = envelope(c);
  j["reports"] = std::move(list);
  j["exit_status"] = status;
  write_json(prefix + ".json", j);
  return status;
}

int cmd_distance(const RunConfig& c, std::ostream& out) {
  if (c.function.empty()) throw UsageError("distance needs --f naming a gallery function");
  const Domain domain = parse_domain(c.domain);
  const auto f = gallery_function(c.function, c.n, c.n_half);
  if (f.domain != domain) {
    throw UsageError("function '" + c.function + "' lives on the " + to_string(f.domain) + ", not the " + c.domain);
  }
  NormSpec target;
  target.p = c.p;
  target.alpha = c.alpha;
  target.q = c.q;
  if (c.scale == "Ap") {
    target.scale = Scale::Ap;
  } else if (c.scale == "Bpq") {
    target.scale = Scale::Bpq;
  } else if (c.scale == "Fpq") {
    target.scale = Scale::Fpq;
  } else {
    throw UsageError("--scale must be Ap, Bpq or Fpq, got '" + c.scale + "'");
  }
  std::vector<double> sweep;
  if (domain == Domain::ball) {
    sweep = c.beta.empty() ? std::vector<double>{2.0} : c.beta;
  } else {
    for (int m : c.m.empty() ? std::vector<int>{1} : c.m) sweep.push_back(m);
  }
  ExperimentOptions opt;
  opt.extra_eps = c.eps;
  if (c.outer_levels) opt.grid.outer_levels = *c.outer_levels;
  const auto rep = equivalence_experiment(f, target, sweep, opt);

  const std::string prefix = c.out_prefix();
  const char* kname = kernel_name(domain);
  const std::string weight =
      domain == Domain::ball ? "(1-|x|)^lambda; " + std::string(kBallConventions) : "t^lambda; half-space dy dt";
  {
    auto csv = open_output(prefix + ".csv");
    csv << "# f1_sup and s1_upper = sup |f1| " << weight << "; lambda=" << shortest(rep.lambda)
        << "; target " << to_string(target.scale) << " p=" << shortest(target.p) << " alpha=" << shortest(target.alpha)
        << '\n';
    csv << kname << ",eps,classification,empty_level_set,f1_sup,s1_upper,reproduction_error\n";
    for (const auto& run : rep.runs) {
      for (const auto& row : run.rows) {
        csv << shortest(run.kernel_param) << ',' << shortest(row.eps) << ',' << to_string(row.profile.classification)
            << ',' << (row.empty_level_set ? 1 : 0) << ',' << shortest(row.f1_sup) << ','
            << optional_text(row.s1_upper) << ',' << shortest(row.reproduction_error) << '\n';
      }
    }
  }
  for (const auto& run : rep.runs) {
    auto dat = open_output(prefix + "_" + kname + shortest(run.kernel_param) + ".dat");
    dat << "# columns: log(c) log(I_c); c = truncation distance to the boundary (1-R on the ball), "
           "I_c = truncated outer s2 integral; one block per eps\n";
    for (const auto& row : run.rows) {
      dat << "# eps=" << shortest(row.eps) << " " << to_string(row.profile.classification) << '\n';
      for (std::size_t k = 0; k < row.profile.cutoffs.size(); ++k) {
        if (row.profile.values[k] > 0.0) {
          dat << shortest(std::log(row.profile.cutoffs[k])) << ' ' << shortest(std::log(row.profile.values[k]))
              << '\n';
        }
      }
      dat << "\n\n";
    }
  }
  json j = envelope(c);
  j["report"] = distance_json(rep);
  write_json(prefix + ".json", j);

  out << rep.function << " on the " << to_string(rep.domain) << ", lambda " << shortest(rep.lambda)
      << ", weighted sup " << shortest(rep.weighted_sup) << '\n';
  bool coherent = true;
  for (const auto& run : rep.runs) {
    coherent = coherent && run.coherent;
    out << "  " << kname << " " << shortest(run.kernel_param) << ": s2 bracket [" << shortest(run.bracket_lo) << ", "
        << shortest(run.bracket_hi) << "]  f1_sup/eps band [" << shortest(run.ratio_lo) << ", "
        << shortest(run.ratio_hi) << "]" << (run.coherent ? "" : "  INCOHERENT") << '\n';
  }
  for (const auto& note : rep.notes) out << "  note: " << note << '\n';
  return coherent ? exit_pass : exit_fail;
}

int cmd_norms(const RunConfig& c, std::ostream& out) {
  const Domain domain = parse_domain(c.domain);
  std::vector<HarmonicFn> fs;
  if (c.function.empty()) {
    for (auto& f : gallery(c.n, c.n_half)) {
      if (f.domain == domain) fs.push_back(std::move(f));
    }
  } else {
    for (const auto& label : split(c.function, ',')) fs.push_back(gallery_function(label, c.n, c.n_half));
  }
  const auto alphas = c.alphas.empty() ? std::vector<double>{0.0, 1.0} : c.alphas;
  const double p = c.p;
  std::vector<NormColumn> cols;
  for (double a : alphas) {
    cols.push_back({"A^" + shortest(p) + "_" + shortest(a), [=](const HarmonicFn& f) { return bergman_norm(f, p, a); }});
  }
  if (c.q) {
    const double q = *c.q;
    for (double a : alphas) {
      const std::string idx = shortest(p) + "_" + shortest(a) + "[q=" + shortest(q) + "]";
      cols.push_back({"B^" + idx, [=](const HarmonicFn& f) { return mixed_norm(f, Scale::Bpq, p, q, a); }});
      cols.push_back({"F^" + idx, [=](const HarmonicFn& f) { return mixed_norm(f, Scale::Fpq, p, q, a); }});
    }
  }
  if (const auto w = parse_weight(c.weight, domain)) {
    cols.push_back({"h^" + shortest(p) + "_v[" + c.weight + "]",
                    [=, v = *w](const HarmonicFn& f) { return weighted_norm(f, p, v); }});
  }
  for (double a : alphas) {
    NormSpec s;
    s.p = p;
    s.alpha = a;
    s.validate();
  }

  // Cells by (function, column), computed concurrently and laid out in order.
  const std::size_t cells = fs.size() * cols.size();
  const auto texts = parallel_map<std::string>(cells, [&](std::size_t k) {
    const auto& f = fs[k / cols.size()];
    try {
      const auto r = cols[k % cols.size()].eval(f);
      return r.divergent ? std::string("DIV") : shortest(r.value);
    } catch (const PreconditionError&) {
      throw;
    } catch (const std::exception&) {
      return std::string("ERR");
    }
  });

  const std::string prefix = c.out_prefix();
  {
    auto csv = open_output(prefix + ".csv");
    csv << "# norms with the root taken; "
        << (domain == Domain::ball ? "ball weight (1-|x|^2)^alpha, v(1-|x|); " + std::string(kBallConventions)
                                   : std::string("half-space weight t^alpha, v(t); dy dt"))
        << "; DIV = divergent\n";
    csv << "function";
    for (const auto& col : cols) csv << ',' << col.name;
    csv << '\n';
    for (std::size_t i = 0; i < fs.size(); ++i) {
      csv << fs[i].label;
      for (std::size_t k = 0; k < cols.size(); ++k) csv << ',' << texts[i * cols.size() + k];
      csv << '\n';
    }
  }
  json j = envelope(c);
  json rows = json::array();
  for (std::size_t i = 0; i < fs.size(); ++i) {
    json row;
    row["function"] = fs[i].label;
    for (std::size_t k = 0; k < cols.size(); ++k) row[cols[k].name] = texts[i * cols.size() + k];
    rows.push_back(std::move(row));
  }
  j["table"] = std::move(rows);
  write_json(prefix + ".json", j);

  std::size_t w0 = 8;
  for (const auto& f : fs) w0 = std::max(w0, f.label.size());
  std::vector<std::size_t> widths;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    std::size_t w = cols[k].name.size();
    for (std::size_t i = 0; i < fs.size(); ++i) w = std::max(w, texts[i * cols.size() + k].size());
    widths.push_back(w);
  }
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - std::min(w, s.size()), ' '); };
  out << pad("function", w0);
  for (std::size_t k = 0; k < cols.size(); ++k) out << "  " << pad(cols[k].name, widths[k]);
  out << '\n';
  bool errors = false;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    out << pad(fs[i].label, w0);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const auto& t = texts[i * cols.size() + k];
      errors = errors || t == "ERR";
      out << "  " << pad(t, widths[k]);
    }
    out << '\n';
  }
  return errors ? exit_fail : exit_pass;
}

int cmd_whitney(const RunConfig& c, std::ostream& out) {
  return parse_domain(c.domain) == Domain::ball ? whitney_ball_cmd(c, out) : whitney_halfspace_cmd(c, out);
}

int run(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  RunConfig c;
  Raw raw;
  CLI::App app{"Weighted harmonic Bergman space experiments", "bergman_lab"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify", "numerical checks of the kernel estimates and representations");
  add_common(verify, c);
  add_domain(verify, c);
  verify->add_option("--lemma", c.lemma, "rro | qbeta | qm | kernel | poisson | representation");
  verify->add_option("--suite", c.suite, "'all' runs the fixed battery");
  verify->add_option("--part", c.part, "kernel bound: pointwise | sphere_mean | sphere_power | halfspace");
  verify->add_option("--f", c.function, "gallery labels (representation), comma separated");
  verify->add_option("--alpha", c.alpha, "weight exponent")->capture_default_str();
  verify->add_option("--lambda", c.lambda, "radial integral exponent")->capture_default_str();
  verify->add_option("--delta", c.delta, "power-integral weight exponent")->capture_default_str();
  auto* gamma = verify->add_option("--gamma", raw.gamma, "power-integral exponent");
  verify->add_option("--beta", raw.beta, "ball kernel orders, comma separated");
  verify->add_option("--m", raw.m, "half-space kernel orders, comma separated");
  verify->add_option("--p", c.p, "integrability exponent (inf allowed for weighted runs)")->capture_default_str();
  verify->add_option("--weight", c.weight, "none | power:a | log_power:a,b")->capture_default_str();
  verify->add_option("--r", c.r, "Poisson series radius")->capture_default_str();
  verify->add_option("--t", c.t, "Poisson series cosine")->capture_default_str();
  verify->add_option("--k-max", c.k_max, "Poisson series order")->capture_default_str();
  verify->add_option("--samples", c.samples, "kernel-bound samples")->capture_default_str();
  verify->add_option("--grid", raw.grid, "boundary-approach grid (rho, r or t values)");

  auto* distance = app.add_subcommand("distance", "s2 profiles, f1 sups and s1 upper bounds over eps");
  add_common(distance, c);
  add_domain(distance, c);
  distance->add_option("--f", c.function, "gallery label");
  distance->add_option("--p", c.p, "target exponent p")->capture_default_str();
  auto* q = distance->add_option("--q", raw.q, "target exponent q (Bpq, Fpq)");
  distance->add_option("--alpha", c.alpha, "target weight exponent")->capture_default_str();
  distance->add_option("--scale", c.scale, "Ap | Bpq | Fpq")->capture_default_str();
  distance->add_option("--beta", raw.beta, "ball kernel orders, comma separated");
  distance->add_option("--m", raw.m, "half-space kernel orders, comma separated");
  distance->add_option("--eps", raw.eps, "extra eps values, comma separated");
  auto* outer = distance->add_option("--outer-levels", raw.outer_levels, "outer truncation levels");

  auto* norms = app.add_subcommand("norms", "norm table over the gallery");
  add_common(norms, c);
  add_domain(norms, c);
  norms->add_option("--f", c.function, "gallery labels, comma separated (default: all on the domain)");
  norms->add_option("--p", c.p, "exponent p")->capture_default_str();
  auto* qn = norms->add_option("--q", raw.q, "adds mixed-norm B and F columns with this q");
  norms->add_option("--alpha", raw.alphas, "weight exponents, comma separated (default 0,1)");
  norms->add_option("--weight", c.weight, "adds a weighted column: power:a | log_power:a,b")->capture_default_str();

  auto* whitney = app.add_subcommand("whitney", "Whitney cubes of the half-space or cells of the ball");
  add_common(whitney, c);
  add_domain(whitney, c);
  auto* levels = whitney->add_option("--levels", raw.levels, "boundary levels");
  auto* lmin = whitney->add_option("--level-min", raw.level_min, "lowest cube level");
  auto* lmax = whitney->add_option("--level-max", raw.level_max, "highest cube level");
  whitney->add_option("--lo", raw.lo, "box lower corner, height last");
  whitney->add_option("--hi", raw.hi, "box upper corner, height last");

  try {
    const auto args = with_config(input);
    std::vector<std::string> store{"bergman_lab"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : store) argv.push_back(s.data());
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (gamma->count()) c.gamma = raw.gamma;
    if (q->count() || qn->count()) c.q = raw.q;
    if (outer->count()) c.outer_levels = raw.outer_levels;
    if (levels->count()) c.levels = raw.levels;
    if (lmin->count()) c.level_min = raw.level_min;
    if (lmax->count()) c.level_max = raw.level_max;
    c.beta = parse_doubles(raw.beta, "--beta");
    c.m = parse_ints(raw.m, "--m");
    c.alphas = parse_doubles(raw.alphas, "--alpha");
    c.grid = parse_doubles(raw.grid, "--grid");
    c.eps = parse_doubles(raw.eps, "--eps");
    c.lo = parse_doubles(raw.lo, "--lo");
    c.hi = parse_doubles(raw.hi, "--hi");

    if (verify->parsed()) {
      c.command = "verify";
      return cmd_verify(c, out);
    }
    if (distance->parsed()) {
      c.command = "distance";
      return cmd_distance(c, out);
    }
    if (norms->parsed()) {
      c.command = "norms";
      return cmd_norms(c, out);
    }
    c.command = "whitney";
    return cmd_whitney(c, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_pass : exit_usage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_usage;
  } catch (const PreconditionError& e) {
    err << "parameter outside the hypothesis: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_fail;
  }
}

}  // namespace bergman::cli
