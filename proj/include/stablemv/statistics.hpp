#pragma once

// Small statistical toolbox: sample moments, two-sample Kolmogorov-Smirnov,
// bootstrap standard errors and least-squares slope fits.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "stablemv/core.hpp"
#include "stablemv/rng.hpp"

namespace stablemv {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanEstimate mean_with_se(std::span<const double> x) {
  require(!x.empty(), "mean of an empty sample");
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {m, std::sqrt(var / n)};
}

inline double median(std::vector<double> x) {
  require(!x.empty(), "median of an empty sample");
  const std::size_t h = x.size() / 2;
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h), x.end());
  const double hi = x[h];
  if (x.size() % 2 == 1) return hi;
  const double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(h));
  return 0.5 * (lo + hi);
}

/// Kolmogorov distribution tail Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // small-lambda form from the theta-function identity
    const double y = std::exp(-std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int j = 1; j <= 41; j += 2) s += std::pow(y, j * j);
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool passes(double level) const { return p_value > level; }
};

/// Two-sample KS test with the asymptotic p-value (Stephens' small-sample
/// correction on the effective size).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "KS test needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

/// Bootstrap standard error of statistic(sample) from `reps` resamples.
template <class Stat>
double bootstrap_se(std::span<const double> x, Stat&& statistic, std::size_t reps, const RngStream& rng) {
  require(x.size() >= 2 && reps >= 2, "bootstrap needs >= 2 observations and >= 2 resamples");
  RandomSource src = rng.source();
  std::vector<double> resample(x.size()), stats(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    for (double& v : resample) v = x[src.index(x.size())];
    stats[r] = statistic(std::span<const double>(resample));
  }
  return mean_with_se(stats).std_error * std::sqrt(static_cast<double>(reps));
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  ///< from the weighted residuals (or the weights if fewer than 3 points)
};

/// Weighted least squares y = intercept + slope x with weights w_i (1 / var_i).
inline LineFit fit_line(std::span<const double> x, std::span<const double> y, std::span<const double> w = {}) {
  require(x.size() == y.size() && x.size() >= 2, "line fit needs >= 2 matching points");
  require(w.empty() || w.size() == x.size(), "weights must match the points");
  const std::size_t n = x.size();
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "line fit needs at least two distinct x values");
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w.empty() ? 1.0 : w[i];
      const double r = y[i] - out.intercept - out.slope * x[i];
      rss += wi * r * r;
    }
    out.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  } else if (!w.empty()) {
    out.slope_se = std::sqrt(1.0 / sxx);
  }
  return out;
}

}  // namespace stablemv
