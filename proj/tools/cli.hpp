#pragma once

// Command-line front end: configuration, the verify / distance / norms /
// whitney commands and their report files.
//
// Every command writes <out>.json (schema "1", embedding the configuration)
// and one or more CSV files whose first line names the conventions in use.
// Exit status: 0 pass, 1 failure, 2 inconclusive, 64 usage error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bergman::cli {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_inconclusive = 2, exit_usage = 64 };

/// A configuration that cannot be dispatched (unknown name, missing value).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  std::string command;
  // verify
  std::string lemma;            // rro | qbeta | qm | kernel | poisson | representation
  std::string suite;            // "all": the fixed battery at dimension n / n_half
  std::string part;             // kernel bound: pointwise | sphere_mean | sphere_power | halfspace
  // shared
  std::string domain = "ball";
  std::string function;         // gallery label(s), comma separated for norms
  int n = 3;                    // ball dimension
  int n_half = 1;               // half-space boundary dimension
  std::vector<double> beta;
  std::vector<int> m;
  double p = 2.0;
  std::optional<double> q;
  double alpha = 0.0;
  std::vector<double> alphas;   // norms table columns
  double lambda = 2.0;
  double delta = 0.0;
  std::optional<double> gamma;
  double r = 0.5;
  double t = 1.0;
  int k_max = 32;
  int samples = 4096;
  std::vector<double> grid;     // sample grid of the lemma (rho, r or t values)
  std::string weight = "none";  // none | power:a | log_power:a,b
  std::string scale = "Ap";     // distance target: Ap | Bpq | Fpq
  std::vector<double> eps;      // extra absolute eps values
  std::optional<int> outer_levels;
  // whitney
  std::optional<int> levels;
  std::optional<int> level_min;
  std::optional<int> level_max;
  std::vector<double> lo;
  std::vector<double> hi;
  // output
  std::string out;              // file prefix; defaults to the command name
  std::uint64_t seed = 0;
  std::string config_file;

  nlohmann::ordered_json to_json() const;
  std::string out_prefix() const { return out.empty() ? command : out; }
};

/// Parses "key = value" lines ('#' comments) into "--key=value" tokens;
/// underscores in keys become dashes.
std::vector<std::string> read_config_file(const std::string& path);

/// Full command line without the program name. Parse errors and violated
/// parameter ranges return exit_usage with the message on err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cmd_verify(const RunConfig& config, std::ostream& out);
int cmd_distance(const RunConfig& config, std::ostream& out);
int cmd_norms(const RunConfig& config, std::ostream& out);
int cmd_whitney(const RunConfig& config, std::ostream& out);

}  // namespace bergman::cli
