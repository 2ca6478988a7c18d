#pragma once

// Classification of improper integrals from a sequence of truncations.
//
// An improper integral of a nonnegative function is approximated by I_k,
// the integral over the region left after cutting at c_k (c_k -> 0 is the
// distance to the singular boundary). The increments D_k = I_k - I_{k-1}
// decide the outcome: geometric decay means the integral converges;
// increments that stop shrinking mean it diverges (a logarithmic divergence
// has constant increments on dyadic cutoffs, so the log-log slope alone
// would not see it).

#include <string>
#include <vector>

namespace bergman {

enum class Classification { finite, divergent, inconclusive };

const char* to_string(Classification c);

struct DivergenceOptions {
  int window = 3;                // number of trailing increment ratios examined
  double finite_ratio = 0.9;     // all ratios at or below: FINITE
  double divergent_ratio = 0.95; // all ratios at or above: DIVERGENT
  double negligible = 1e-14;     // increments below this times |I| count as zero
};

struct DivergenceProfile {
  std::vector<double> cutoffs;   // decreasing distances to the singular set
  std::vector<double> values;    // truncated integrals, nondecreasing
  double fitted_exponent = 0.0;  // slope of log I against -log c, last points
  Classification classification = Classification::inconclusive;
  double estimate = 0.0;         // extrapolated value when FINITE
  double tail_estimate = 0.0;    // geometric tail of the increments when FINITE
  std::string note;
};

/// Builds and classifies a profile. Throws PreconditionError when the sizes
/// differ or the cutoffs are not strictly decreasing and positive.
DivergenceProfile classify_profile(std::vector<double> cutoffs, std::vector<double> values,
                                   const DivergenceOptions& options = {});

/// Least-squares slope of log values against -log cutoffs over the last
/// `points` entries with positive values (0 if fewer than two).
double fitted_exponent(const std::vector<double>& cutoffs, const std::vector<double>& values,
                       int points);

}  // namespace bergman
