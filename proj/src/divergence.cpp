#include "bergman/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bergman/errors.hpp"

namespace bergman {

const char* to_string(Classification c) {
  switch (c) {
    case Classification::finite: return "FINITE";
    case Classification::divergent: return "DIVERGENT";
    case Classification::inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

double fitted_exponent(const std::vector<double>& cutoffs, const std::vector<double>& values,
                       int points) {
  std::vector<double> xs, ys;
  for (std::size_t i = values.size(); i-- > 0 && static_cast<int>(xs.size()) < points;) {
    if (values[i] > 0.0) {
      xs.push_back(-std::log(cutoffs[i]));
      ys.push_back(std::log(values[i]));
    }
  }
  if (xs.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

DivergenceProfile classify_profile(std::vector<double> cutoffs, std::vector<double> values,
                                   const DivergenceOptions& options) {
  if (cutoffs.size() != values.size()) throw PreconditionError("cutoffs and values differ in length");
  for (std::size_t i = 0; i < cutoffs.size(); ++i) {
    if (!(cutoffs[i] > 0.0)) throw PreconditionError("cutoffs must be positive");
    if (i > 0 && !(cutoffs[i] < cutoffs[i - 1])) throw PreconditionError("cutoffs must decrease");
  }
  DivergenceProfile prof;
  prof.cutoffs = std::move(cutoffs);
  prof.values = std::move(values);
  const auto& v = prof.values;
  const int w = options.window;
  prof.fitted_exponent = fitted_exponent(prof.cutoffs, v, w);

  for (double x : v) {
    if (!std::isfinite(x)) {
      prof.note = "non-finite truncated value";
      return prof;
    }
  }
  if (static_cast<int>(v.size()) < w + 2) {
    prof.note = "too few truncations to classify";
    return prof;
  }
  const double last = v.back();
  const double scale = std::max(std::abs(last), std::numeric_limits<double>::min());
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[i - 1] - 1e-10 * scale) {
      prof.note = "truncated values decrease; integrand is not nonnegative or quadrature is unresolved";
      return prof;
    }
  }

  const std::size_t k = v.size() - 1;
  bool negligible = true;
  for (int j = 0; j < w; ++j) {
    if (std::abs(v[k - j] - v[k - j - 1]) > options.negligible * scale) negligible = false;
  }
  if (last == 0.0 || negligible) {
    prof.classification = Classification::finite;
    prof.estimate = last;
    prof.note = last == 0.0 ? "integrand vanishes on every truncation" : "increments negligible";
    return prof;
  }

  std::vector<double> ratios;
  for (int j = w - 1; j >= 0; --j) {
    const double cur = v[k - j] - v[k - j - 1];
    const double prev = v[k - j - 1] - v[k - j - 2];
    double q;
    if (prev > 0.0) {
      q = cur / prev;
    } else {
      q = cur > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    ratios.push_back(q);
  }
  const double qmax = *std::max_element(ratios.begin(), ratios.end());
  const double qmin = *std::min_element(ratios.begin(), ratios.end());
  if (qmax <= options.finite_ratio) {
    prof.classification = Classification::finite;
    const double inc = std::max(0.0, v[k] - v[k - 1]);
    prof.tail_estimate = inc * qmax / (1.0 - qmax);
    prof.estimate = last + prof.tail_estimate;
    prof.note = "increments decay geometrically";
  } else if (qmin >= options.divergent_ratio && prof.fitted_exponent > 0.0) {
    prof.classification = Classification::divergent;
    prof.note = "increments do not decay";
  } else {
    prof.note = "increment ratios between the finite and divergent thresholds";
  }
  return prof;
}

}  // namespace bergman
