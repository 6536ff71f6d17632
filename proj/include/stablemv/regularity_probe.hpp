#pragma once

// Monte-Carlo decay rates of the frozen-flow semigroup
//   P_{r,t} f(x) = E f(X_t^{r,x})
// in the lag t - r: the gradient |grad P f| (target (eta - 1) / alpha) and
// the fractional difference integral
//   D^alpha u(x) = int |u(x+y) + u(x-y) - 2u(x)| |y|^{-1-alpha} dy
// of u = P f in d = 1 (target -1 + eta / alpha).
//
// Probe points scale with the lag: the gradient probe evaluates at
// x_ref * lag^{1/alpha} with step h = h_factor * lag^{1/alpha}, the
// fractional probe at x = 0 with grid spacing proportional to
// lag^{1/alpha}. For the pure stable semigroup the estimates then follow
// the target power law exactly, finite-difference bias included.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "stablemv/coefficients.hpp"
#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

namespace stablemv {

/// Test function with a declared Hoelder exponent; probes require [f]_eta <= 1.
struct TestFunction {
  std::function<double(std::span<const double>)> f;
  double eta = 0.5;
  std::string label = "custom";
};

/// f(x) = |x_1|^eta
inline TestFunction abs_power_function(double eta) {
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");
  return {[eta](std::span<const double> x) { return std::pow(std::abs(x[0]), eta); }, eta,
          "abs_power"};
}

inline TestFunction constant_function(double value, double eta) {
  return {[value](std::span<const double>) { return value; }, eta, "constant"};
}

/// Largest |f(x) - f(y)| / |x - y|^eta over pairs of sample points spread
/// across several scales around `center` and around the origin.
inline double holder_ratio(const TestFunction& tf, std::span<const double> center, const RngStream& rng,
                           std::size_t points = 120) {
  RandomSource src = rng.source();
  const std::size_t d = center.size();
  Points p(points, d);
  const double scales[] = {1e-3, 0.1, 1.0, 10.0, 1e3};
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t k = 0; k < d; ++k) p[i][k] = (i % 2 == 0 ? center[k] : 0.0) + scales[(i / 2) % 5] * src.normal();
  double worst = 0.0;
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = i + 1; j < points; ++j) {
      const double dist = distance(p[i], p[j]);
      if (dist > 0.0) worst = std::max(worst, std::abs(tf.f(p[i]) - tf.f(p[j])) / std::pow(dist, tf.eta));
    }
  return worst;
}

struct ProbeOptions {
  double r = 0.0;                 ///< start time of the semigroup
  std::size_t steps = 10;         ///< Euler steps per lag (1 is exact for constant coefficients)
  std::size_t batches = 40;       ///< batch means for the bootstrap
  std::size_t bootstrap_reps = 400;
  double min_snr = 3.0;           ///< gradient: |estimate| / stderr below this is inconclusive
  // gradient probe
  double h_factor = 0.1;          ///< h = h_factor * lag^{1/alpha}
  std::vector<double> x_ref;      ///< probe point at lag 1; default e_1
  // fractional probe
  double grid_factor = 0.05;      ///< spacing = grid_factor * lag^{1/alpha}
  std::size_t half_points = 400;  ///< grid points on each side of x
  double max_cutoff_change = 0.2; ///< relative change between inner cutoffs h and h/2
};

struct ProbeResult {
  std::vector<double> lags;
  std::vector<double> estimates;
  std::vector<double> std_errors;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double slope_ci_low = std::numeric_limits<double>::quiet_NaN();
  double slope_ci_high = std::numeric_limits<double>::quiet_NaN();
  double target_exponent = 0.0;
  bool inconclusive = false;
  std::vector<std::string> notes;
  // gradient probe: per-lag variance of one finite-difference term
  std::vector<double> coupled_variance;
  std::vector<double> uncoupled_variance;
  // fractional probe: estimate with the coarser inner cutoff and the relative change
  std::vector<double> coarse_cutoff_estimates;
  std::vector<double> cutoff_change;
};

namespace detail {

inline void check_lags(const std::vector<double>& lags) {
  require(lags.size() >= 3, "probe needs at least 3 lags");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    require(lags[i] > 0.0 && std::isfinite(lags[i]), "lags must be positive");
    if (i > 0) require(lags[i] > lags[i - 1], "lags must be increasing");
  }
  require(std::log10(lags.back() / lags.front()) >= 1.5 - 1e-12, "lags must span at least 1.5 decades");
}

inline void check_test_function(const TestFunction& tf, std::span<const double> center, const RngStream& rng) {
  require(static_cast<bool>(tf.f), "test function is empty");
  require(tf.eta > 0.0 && tf.eta <= 1.0, "test function exponent must lie in (0, 1]");
  const double ratio = holder_ratio(tf, center, rng);
  require(ratio <= 1.0 + 1e-9, "test function fails the Hoelder check: sampled [f]_eta = " + std::to_string(ratio));
}

/// Coefficients seen from start time r: b_{r+s}, sigma_{r+s}.
inline CoefficientSet shifted_in_time(const CoefficientSet& c, double r) {
  if (r == 0.0) return c;
  CoefficientSet out = c;
  auto drift = c.drift;
  out.drift = [drift, r](double t, std::span<const double> x, const MeasureArg& m, std::span<double> o) {
    drift(t + r, x, m, o);
  };
  if (c.diffusion) {
    auto diff = c.diffusion;
    out.diffusion = [diff, r](double t, std::span<const double> x, const MeasureArg& m, std::span<double> o) {
      diff(t + r, x, m, o);
    };
  }
  if (c.summary) {
    auto summary = c.summary;
    out.summary = [summary, r](double t, const EmpiricalMeasure& m) { return summary(t + r, m); };
  }
  return out;
}

/// Simulates X_{r+lag}^{r,x} for many starting points x with one noise tape.
class SemigroupSampler {
 public:
  SemigroupSampler(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow* flow, double r, double lag,
                   std::size_t N, std::size_t steps, const RngStream& rng)
      : c_(shifted_in_time(c, r)), spec_(spec), grid_(TimeGrid::uniform(lag, steps)), n_(N), rng_(rng),
        tape_(NoiseTape::generate(spec, grid_, N, rng)), flow_(make_flow(c, spec, flow, r, grid_)) {}

  /// Endpoints X^{x}_{lag} of the N particles.
  EmpiricalMeasure endpoints(std::span<const double> x) const {
    const auto init = InitialLaw::dirac(std::vector<double>(x.begin(), x.end()));
    return euler_frozen_flow(c_, spec_, flow_, init, grid_, n_, rng_, &tape_).marginal(grid_.steps());
  }

 private:
  static MeasureFlow make_flow(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow* flow, double r,
                               const TimeGrid& grid) {
    if (flow == nullptr) {
      require(!c.measure_dependent(), "measure-dependent coefficients need a frozen flow");
      return MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>(spec.dim, 0.0)));
    }
    require(flow->dim() == spec.dim, "flow dimension differs from the noise dimension");
    require(r + grid.horizon() <= flow->grid().horizon() * (1.0 + 1e-12), "lag runs past the flow horizon");
    std::vector<EmpiricalMeasure> ms;
    for (std::size_t k = 0; k < grid.size(); ++k) ms.push_back(flow->at(std::min(r + grid[k], flow->grid().horizon())));
    return MeasureFlow(grid, std::move(ms));
  }

  CoefficientSet c_;
  StableSpec spec_;
  TimeGrid grid_;
  std::size_t n_;
  RngStream rng_;
  NoiseTape tape_;
  MeasureFlow flow_;
};

/// Means of `values` over `batches` contiguous batches.
inline std::vector<double> batch_means(std::span<const double> values, std::size_t batches) {
  std::vector<double> out(batches, 0.0);
  const std::size_t per = values.size() / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) out[b] += values[i];
    out[b] /= static_cast<double>(per);
  }
  return out;
}

inline double percentile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Log-log slope and a percentile interval from per-lag bootstrap replicates
/// (replicates[j][b] = replicate b of the estimate at lag j).
inline void fit_slope(ProbeResult& res, const std::vector<std::vector<double>>& replicates) {
  for (double e : res.estimates) {
    if (!(e > 0.0)) {
      res.inconclusive = true;
      res.notes.push_back("non-positive estimate; no slope fitted");
      return;
    }
  }
  const std::size_t L = res.lags.size();
  std::vector<double> lx(L), ly(L);
  for (std::size_t j = 0; j < L; ++j) {
    lx[j] = std::log(res.lags[j]);
    ly[j] = std::log(res.estimates[j]);
  }
  res.fitted_slope = fit_line(lx, ly).slope;
  const std::size_t B = replicates.empty() ? 0 : replicates[0].size();
  std::vector<double> slopes;
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> y(L);
    bool ok = true;
    for (std::size_t j = 0; j < L; ++j) {
      ok = ok && replicates[j][b] > 0.0;
      y[j] = ok ? std::log(replicates[j][b]) : 0.0;
    }
    if (ok) slopes.push_back(fit_line(lx, y).slope);
  }
  if (slopes.size() >= 20) {
    res.slope_ci_low = percentile(slopes, 0.025);
    res.slope_ci_high = percentile(slopes, 0.975);
  }
}

/// Bootstrap replicates of f(mean of batch values); batches resampled with replacement.
template <class Stat>
std::vector<double> batch_bootstrap(const std::vector<std::vector<double>>& batch_vectors, Stat&& stat,
                                    std::size_t reps, const RngStream& rng) {
  RandomSource src = rng.source();
  const std::size_t B = batch_vectors.size(), len = batch_vectors[0].size();
  std::vector<double> out(reps), mean(len);
  for (std::size_t r = 0; r < reps; ++r) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t q = 0; q < B; ++q) {
      const auto& v = batch_vectors[src.index(B)];
      for (std::size_t k = 0; k < len; ++k) mean[k] += v[k];
    }
    for (double& m : mean) m /= static_cast<double>(B);
    out[r] = stat(mean);
  }
  return out;
}

inline double sample_sd(const std::vector<double>& x) {
  return mean_with_se(x).std_error * std::sqrt(static_cast<double>(x.size()));
}

}  // namespace detail

/// |grad P_{r,r+lag} f| at x_ref * lag^{1/alpha} by central differences with
/// common random numbers across the +-h starting points.
inline ProbeResult grad_decay_probe(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow* flow,
                                    const TestFunction& tf, const std::vector<double>& lags, std::size_t N,
                                    const RngStream& rng, const ProbeOptions& opts = {}) {
  spec.validate();
  detail::check_lags(lags);
  require(c.dim == spec.dim, "coefficient dimension differs from the noise dimension");
  require(N >= 2 * opts.batches && opts.batches >= 2, "probe needs N >= 2 x batches");
  std::vector<double> x_ref = opts.x_ref;
  if (x_ref.empty()) {
    x_ref.assign(spec.dim, 0.0);
    x_ref[0] = 1.0;
  }
  require(x_ref.size() == spec.dim, "x_ref dimension differs from the noise dimension");
  detail::check_test_function(tf, x_ref, rng.substream(0x401d));

  ProbeResult res;
  res.lags = lags;
  res.target_exponent = (tf.eta - 1.0) / spec.alpha;
  std::vector<std::vector<double>> replicates;
  const std::size_t d = spec.dim;
  for (std::size_t j = 0; j < lags.size(); ++j) {
    const double s = std::pow(lags[j], 1.0 / spec.alpha);
    const double h = opts.h_factor * s;
    const detail::SemigroupSampler sampler(c, spec, flow, opts.r, lags[j], N, opts.steps, rng.substream(j));
    // per-batch mean of the finite-difference vector, one entry per coordinate
    std::vector<std::vector<double>> batch_vectors(opts.batches, std::vector<double>(d, 0.0));
    double var_coupled = 0.0, var_uncoupled = 0.0;
    for (std::size_t q = 0; q < d; ++q) {
      std::vector<double> xp(d), xm(d);
      for (std::size_t k = 0; k < d; ++k) xp[k] = xm[k] = x_ref[k] * s;
      xp[q] += h;
      xm[q] -= h;
      const auto ep = sampler.endpoints(xp), em = sampler.endpoints(xm);
      std::vector<double> fp(N), fm(N), fd(N);
      for (std::size_t i = 0; i < N; ++i) {
        fp[i] = tf.f(ep.point(i));
        fm[i] = tf.f(em.point(i));
        fd[i] = (fp[i] - fm[i]) / (2.0 * h);
      }
      const auto bm = detail::batch_means(fd, opts.batches);
      for (std::size_t b = 0; b < opts.batches; ++b) batch_vectors[b][q] = bm[b];
      const double sd_c = detail::sample_sd(fd);
      const double sd_p = detail::sample_sd(fp), sd_m = detail::sample_sd(fm);
      var_coupled += sd_c * sd_c;
      var_uncoupled += (sd_p * sd_p + sd_m * sd_m) / (4.0 * h * h);
    }
    res.coupled_variance.push_back(var_coupled);
    res.uncoupled_variance.push_back(var_uncoupled);
    std::vector<double> grad(d, 0.0);
    for (const auto& v : batch_vectors)
      for (std::size_t q = 0; q < d; ++q) grad[q] += v[q] / static_cast<double>(opts.batches);
    res.estimates.push_back(norm(grad));
    auto reps = detail::batch_bootstrap(batch_vectors, [](const std::vector<double>& g) { return norm(g); },
                                        opts.bootstrap_reps, rng.substream(j).substream(0xb007));
    res.std_errors.push_back(detail::sample_sd(reps));
    if (!(res.estimates.back() >= opts.min_snr * res.std_errors.back())) {
      res.inconclusive = true;
      res.notes.push_back("lag " + std::to_string(lags[j]) + ": signal-to-noise below " +
                          std::to_string(opts.min_snr));
    }
    replicates.push_back(std::move(reps));
  }
  detail::fit_slope(res, replicates);
  return res;
}

namespace detail {

/// Quadrature of |D(y)| |y|^{-1-alpha} over y > 0 (doubled for the two
/// sides) given D on the grid y_m = m * spacing, m = 1..J, with the inner
/// part below cutoff_index * spacing replaced by |D''| y^2 and the part
/// beyond J * spacing by `tail`.
inline double frac_integral(const std::vector<double>& D, double spacing, double alpha, std::size_t cutoff_index,
                            double tail) {
  const std::size_t J = D.size() - 1;  // D[0] = 0 at y = 0
  const double eps = static_cast<double>(cutoff_index) * spacing;
  const double curvature = std::abs(D[cutoff_index]) / (eps * eps);
  double inner = curvature * std::pow(eps, 2.0 - alpha) / (2.0 - alpha);
  double middle = 0.0;
  for (std::size_t m = cutoff_index; m < J; ++m) {
    const double y0 = static_cast<double>(m) * spacing, y1 = y0 + spacing;
    middle += 0.5 * spacing * (std::abs(D[m]) * std::pow(y0, -1.0 - alpha) + std::abs(D[m + 1]) * std::pow(y1, -1.0 - alpha));
  }
  return 2.0 * (inner + middle + tail);
}

}  // namespace detail

/// D^alpha P_{r,r+lag} f at x = 0 in d = 1. P f is tabulated on a symmetric
/// grid from Monte-Carlo endpoints sharing one noise tape; the inner part
/// uses the curvature at the cutoff and the outer tail integrates the
/// second difference of f itself against |y|^{-1-alpha}.
inline ProbeResult frac_deriv_decay_probe(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow* flow,
                                          const TestFunction& tf, const std::vector<double>& lags, std::size_t N,
                                          const RngStream& rng, const ProbeOptions& opts = {}) {
  spec.validate();
  require(spec.dim == 1 && c.dim == 1, "the fractional-derivative probe is one-dimensional");
  require(tf.eta < spec.alpha, "the fractional-derivative probe needs eta < alpha");
  detail::check_lags(lags);
  require(N >= 2 * opts.batches && opts.batches >= 2, "probe needs N >= 2 x batches");
  require(opts.half_points >= 8, "fractional probe needs >= 8 grid points per side");
  const std::vector<double> x0{0.0};
  detail::check_test_function(tf, x0, rng.substream(0x401d));

  ProbeResult res;
  res.lags = lags;
  res.target_exponent = -1.0 + tf.eta / spec.alpha;
  const double alpha = spec.alpha;
  const std::size_t J = opts.half_points;
  std::vector<std::vector<double>> replicates;

  for (std::size_t j = 0; j < lags.size(); ++j) {
    const double spacing = opts.grid_factor * std::pow(lags[j], 1.0 / alpha);
    const detail::SemigroupSampler sampler(c, spec, flow, opts.r, lags[j], N, opts.steps, rng.substream(j));
    // f at the endpoints from each grid start point, then batch means of the second differences
    auto f_at = [&](double x) {
      const auto e = sampler.endpoints(std::vector<double>{x});
      std::vector<double> v(N);
      for (std::size_t i = 0; i < N; ++i) v[i] = tf.f(e.point(i));
      return v;
    };
    const auto center = f_at(0.0);
    const auto center_batches = detail::batch_means(center, opts.batches);
    std::vector<std::vector<double>> batch_D(opts.batches, std::vector<double>(J + 1, 0.0));
    for (std::size_t m = 1; m <= J; ++m) {
      const double y = static_cast<double>(m) * spacing;
      const auto up = f_at(y), down = f_at(-y);
      std::vector<double> sum(N);
      for (std::size_t i = 0; i < N; ++i) sum[i] = up[i] + down[i];
      const auto bm = detail::batch_means(sum, opts.batches);
      for (std::size_t b = 0; b < opts.batches; ++b) batch_D[b][m] = bm[b] - 2.0 * center_batches[b];
    }
    std::vector<double> D(J + 1, 0.0);
    for (const auto& v : batch_D)
      for (std::size_t m = 0; m <= J; ++m) D[m] += v[m] / static_cast<double>(opts.batches);

    // beyond the grid P f is replaced by f; u(0) stays the Monte-Carlo value
    const double u0 = mean_with_se(center).mean;
    const double Y = static_cast<double>(J) * spacing;
    boost::math::quadrature::exp_sinh<double> integrator;
    const double tail = integrator.integrate([&](double z) {
      const double y = Y + z;
      const double up = tf.f(std::vector<double>{y}), down = tf.f(std::vector<double>{-y});
      return std::abs(up + down - 2.0 * u0) * std::pow(y, -1.0 - alpha);
    });

    auto estimate = [&](const std::vector<double>& Dv, std::size_t cutoff) {
      return detail::frac_integral(Dv, spacing, alpha, cutoff, tail);
    };
    const double fine = estimate(D, 1), coarse = estimate(D, 2);
    res.estimates.push_back(fine);
    res.coarse_cutoff_estimates.push_back(coarse);
    const double change = fine > 0.0 ? std::abs(fine - coarse) / fine : 0.0;
    res.cutoff_change.push_back(change);
    if (change > opts.max_cutoff_change) {
      res.inconclusive = true;
      res.notes.push_back("lag " + std::to_string(lags[j]) + ": inner-cutoff sensitivity " + std::to_string(change));
    }
    auto reps = detail::batch_bootstrap(batch_D, [&](const std::vector<double>& Dv) { return estimate(Dv, 1); },
                                        opts.bootstrap_reps, rng.substream(j).substream(0xb007));
    res.std_errors.push_back(detail::sample_sd(reps));
    replicates.push_back(std::move(reps));
  }
  detail::fit_slope(res, replicates);
  return res;
}

}  // namespace stablemv
