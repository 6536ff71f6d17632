#pragma once

// Picard iteration mu -> Law(X^{gamma, mu}) on discretized measure flows,
// measured in the weighted metric sup_k e^{-delta t_k} W_eta(mu_k, nu_k).
//
// Every application of the map reuses one noise tape and one initial draw
// (common random numbers), so successive iterates differ only through the
// measure argument. The noise floor is the distance between two runs of the
// same frozen-flow model on independent streams.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "stablemv/coefficients.hpp"
#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/models.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

namespace stablemv {

namespace detail {
inline constexpr std::uint64_t kDistanceStream = 0x64697374ULL;
inline constexpr std::uint64_t kFloorStream = 0x666c6f6fULL;
inline constexpr std::uint64_t kPureNoiseStream = 0x7075726eULL;
}  // namespace detail

/// Starting flow mu^0.
enum class PicardStart {
  ConstantLaw,  ///< mu^0_t = gamma for all t
  PureNoise,    ///< mu^0_t = Law(X_0 + L_t)
};

inline const char* to_string(PicardStart s) { return s == PicardStart::ConstantLaw ? "constant_law" : "pure_noise"; }

inline PicardStart picard_start_from_string(const std::string& s) {
  if (s == "constant_law") return PicardStart::ConstantLaw;
  if (s == "pure_noise") return PicardStart::PureNoise;
  throw InvalidArgument("unknown Picard start '" + s + "' (expected constant_law or pure_noise)");
}

struct PicardConfig {
  double delta = 0.0;
  double eta = 0.5;
  double tol = 1e-3;
  std::size_t max_iter = 20;
  std::size_t particles = 10000;
  TimeGrid grid = TimeGrid::uniform(1.0, 100);
  PicardStart start = PicardStart::ConstantLaw;
  DistanceOptions distance;
  std::size_t noise_floor_reps = 2;

  /// Throws InvalidArgument on an inadmissible configuration.
  void validate(const CoefficientSet& c, const StableSpec& spec) const {
    spec.validate();
    require(tol > 0.0, "tol must be > 0");
    require(eta > 0.0 && eta < spec.alpha && eta <= 1.0, "eta must lie in (0, min(alpha, 1))");
    require(delta >= 0.0 && std::isfinite(delta), "delta must be >= 0");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(particles >= 2, "Picard iteration needs >= 2 particles");
    require(noise_floor_reps >= 1, "noise_floor_reps must be >= 1");
    require(grid.steps() >= 1, "Picard grid needs at least one step");
    if (c.measure_dependent_drift)
      require(spec.alpha + eta > 1.0, "measure-dependent drift needs alpha + eta > 1 (got alpha = " +
                                          std::to_string(spec.alpha) + ", eta = " + std::to_string(eta) + ")");
  }
};

struct PicardReport {
  std::vector<double> distances;             ///< flow_distance(mu^{k+1}, mu^k), k = 0, 1, ...
  std::vector<double> distance_std_errors;   ///< subsampling standard errors (0 when exact)
  double delta_used = 0.0;
  double fitted_ratio = 0.0;
  bool ratio_from_informative = false;  ///< fitted on iterations above 5x the noise floor
  double theoretical_factor_form = 0.0;  ///< delta^{1/alpha - eta/alpha - 1} + delta^{-eta/alpha}
  bool converged = false;
  std::size_t iterations = 0;
  double residual = 0.0;
  double noise_floor = 0.0;
  double unweighted_sup = 0.0;  ///< sup_k W_eta between the last two iterates
  double eta = 0.5;
};

struct PicardResult {
  MeasureFlow flow;
  PicardReport report;
  std::vector<MeasureFlow> iterates;  ///< mu^0, mu^1, ... when requested
};

/// delta^{1/alpha - eta/alpha - 1} + delta^{-eta/alpha}; infinite at delta = 0.
inline double theoretical_factor(double alpha, double eta, double delta) {
  if (delta <= 0.0) return std::numeric_limits<double>::infinity();
  return std::pow(delta, 1.0 / alpha - eta / alpha - 1.0) + std::pow(delta, -eta / alpha);
}

/// The map mu -> Law(X^{gamma, mu}) at fixed noise: applies the Euler scheme
/// against a frozen flow with a stored tape and a stored initial draw.
class PicardMap {
 public:
  PicardMap(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init, const TimeGrid& grid,
            std::size_t N, const RngStream& rng)
      : c_(c), spec_(spec), init_(init), grid_(grid), n_(N), rng_(rng),
        tape_(NoiseTape::generate(spec, grid, N, rng)) {}

  MeasureFlow operator()(const MeasureFlow& flow) const {
    return euler_frozen_flow(c_, spec_, flow, init_, grid_, n_, rng_, &tape_).marginal_flow();
  }

  const TimeGrid& grid() const { return grid_; }

 private:
  const CoefficientSet& c_;
  StableSpec spec_;
  const InitialLaw& init_;
  TimeGrid grid_;
  std::size_t n_;
  RngStream rng_;
  NoiseTape tape_;
};

/// Starting flow for the iteration.
inline MeasureFlow picard_start_flow(PicardStart start, const StableSpec& spec, const InitialLaw& init,
                                     const TimeGrid& grid, std::size_t N, const RngStream& rng) {
  if (start == PicardStart::ConstantLaw)
    return MeasureFlow::constant(grid, EmpiricalMeasure(init.draw(N, rng.substream(detail::kInitStream))));
  return euler_mckean_particles(pure_stable_model(spec.dim), spec, init, grid, N,
                                rng.substream(detail::kPureNoiseStream))
      .flow;
}

/// Mean flow_distance between two independent runs of the frozen-flow model
/// driven by `flow`.
inline double noise_floor(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow& flow,
                          const InitialLaw& init, std::size_t N, const RngStream& rng, double eta, double delta,
                          const DistanceOptions& opts = {}, std::size_t reps = 2) {
  require(reps >= 1, "noise floor needs >= 1 repetition");
  const auto& grid = flow.grid();
  double acc = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    const RngStream base = rng.substream(detail::kFloorStream).substream(r);
    const auto a = euler_frozen_flow(c, spec, flow, init, grid, N, base.substream(0)).marginal_flow();
    const auto b = euler_frozen_flow(c, spec, flow, init, grid, N, base.substream(1)).marginal_flow();
    acc += flow_distance(a, b, eta, delta, opts, base.substream(2));
  }
  return acc / static_cast<double>(reps);
}

/// One more application of the map: flow_distance(map(flow), flow).
inline double residual_check(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow& flow,
                             const InitialLaw& init, std::size_t N, const RngStream& rng, double eta, double delta,
                             const DistanceOptions& opts = {}) {
  const PicardMap map(c, spec, init, flow.grid(), N, rng);
  return flow_distance(map(flow), flow, eta, delta, opts, rng.substream(detail::kDistanceStream));
}

namespace detail {

/// Geometric ratio exp(slope) of log d_k against k.
inline double log_linear_ratio(const std::vector<double>& k, const std::vector<double>& d) {
  std::vector<double> y(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) y[i] = std::log(d[i]);
  return std::exp(fit_line(k, y).slope);
}

inline void fit_report_ratio(PicardReport& rep) {
  std::vector<double> ki, di, ka, da;
  for (std::size_t k = 0; k < rep.distances.size(); ++k) {
    const double d = rep.distances[k];
    if (d <= 0.0) continue;
    ka.push_back(static_cast<double>(k));
    da.push_back(d);
    if (d >= 5.0 * rep.noise_floor) {
      ki.push_back(static_cast<double>(k));
      di.push_back(d);
    }
  }
  rep.ratio_from_informative = ki.size() >= 2;
  if (rep.ratio_from_informative)
    rep.fitted_ratio = log_linear_ratio(ki, di);
  else if (ka.size() >= 2)
    rep.fitted_ratio = log_linear_ratio(ka, da);
  else
    rep.fitted_ratio = 0.0;
}

}  // namespace detail

/// Iterates until flow_distance(mu^{k+1}, mu^k) < tol or max_iter maps.
/// The returned flow is the last iterate; non-convergence is reported.
inline PicardResult picard_iterate(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init,
                                   const PicardConfig& cfg, const RngStream& rng, bool keep_iterates = false) {
  cfg.validate(c, spec);
  detail::check_simulation(c, spec, init, cfg.grid, cfg.particles);
  const PicardMap map(c, spec, init, cfg.grid, cfg.particles, rng);
  const RngStream dist_rng = rng.substream(detail::kDistanceStream);

  PicardResult out{picard_start_flow(cfg.start, spec, init, cfg.grid, cfg.particles, rng), {}, {}};
  PicardReport& rep = out.report;
  rep.delta_used = cfg.delta;
  rep.eta = cfg.eta;
  rep.theoretical_factor_form = theoretical_factor(spec.alpha, cfg.eta, cfg.delta);
  if (keep_iterates) out.iterates.push_back(out.flow);

  for (std::size_t k = 0; k < cfg.max_iter; ++k) {
    MeasureFlow next = map(out.flow);
    const auto d = flow_distance_report(next, out.flow, cfg.eta, cfg.delta, cfg.distance, dist_rng);
    rep.distances.push_back(d.value);
    rep.distance_std_errors.push_back(d.std_error);
    rep.iterations = k + 1;
    out.flow = std::move(next);
    if (keep_iterates) out.iterates.push_back(out.flow);
    if (d.value < cfg.tol) {
      rep.converged = true;
      break;
    }
  }

  const MeasureFlow again = map(out.flow);
  rep.residual = flow_distance(again, out.flow, cfg.eta, cfg.delta, cfg.distance, dist_rng);
  rep.unweighted_sup = flow_sup_distance(again, out.flow, cfg.eta, cfg.distance, dist_rng);
  rep.noise_floor =
      noise_floor(c, spec, out.flow, init, cfg.particles, rng, cfg.eta, cfg.delta, cfg.distance, cfg.noise_floor_reps);
  detail::fit_report_ratio(rep);
  return out;
}

struct ContractionRate {
  double ratio = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t iterations_used = 0;
};

/// Least-squares geometric ratio over the iterations whose distance is at
/// least min_multiple times the noise floor, with a 95% Student-t interval.
inline ContractionRate contraction_rate(const PicardReport& rep, double min_multiple = 5.0) {
  std::vector<double> k, y;
  for (std::size_t i = 0; i < rep.distances.size(); ++i) {
    if (rep.distances[i] > 0.0 && rep.distances[i] >= min_multiple * rep.noise_floor) {
      k.push_back(static_cast<double>(i));
      y.push_back(std::log(rep.distances[i]));
    }
  }
  if (k.size() < 3)
    throw InsufficientData("too few informative iterations: " + std::to_string(k.size()) +
                           " above the noise floor, need 3");
  const auto fit = fit_line(k, y);
  const boost::math::students_t dist(static_cast<double>(k.size() - 2));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  return {std::exp(fit.slope), std::exp(fit.slope - q * fit.slope_se), std::exp(fit.slope + q * fit.slope_se),
          k.size()};
}

/// delta solving delta^{1/alpha - eta/alpha - 1} + delta^{-eta/alpha} = target
/// (the contraction factor shape with unit constant). Targets >= 2 and
/// measure-independent drift give delta = 0.
inline double delta_initial_guess(double alpha, double eta, double target, bool measure_dependent_drift = true) {
  require(alpha > 0.0 && alpha <= 2.0, "alpha must lie in (0, 2]");
  require(eta > 0.0 && eta < alpha, "eta must lie in (0, alpha)");
  require(target > 0.0, "target ratio must be > 0");
  if (measure_dependent_drift)
    require(alpha + eta > 1.0, "measure-dependent drift needs alpha + eta > 1");
  else if (alpha + eta <= 1.0)
    return 0.0;
  if (target >= 2.0) return 0.0;
  // f(1) = 2 and f decreases, so the root lies in (1, inf)
  const auto f = [&](double log_delta) { return std::log(theoretical_factor(alpha, eta, std::exp(log_delta)) / target); };
  double hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, 0.0, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  return std::exp(0.5 * (r.first + r.second));
}

struct DeltaChoice {
  double delta = 0.0;
  double initial_guess = 0.0;
  double measured_ratio = 0.0;  ///< worst informative successive ratio at the chosen delta
  std::vector<std::pair<double, double>> sweep;  ///< (delta, measured ratio)
  bool satisfied = false;
};

/// Largest d_{k+1} / d_k over iterations with d_k >= min_multiple x noise floor;
/// 0 when no iteration is informative.
inline double worst_informative_ratio(const PicardReport& rep, double min_multiple = 5.0) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < rep.distances.size(); ++k)
    if (rep.distances[k] > 0.0 && rep.distances[k] >= min_multiple * rep.noise_floor)
      worst = std::max(worst, rep.distances[k + 1] / rep.distances[k]);
  return worst;
}

/// Smallest delta in a doubling sweep from delta_initial_guess whose measured
/// ratio is <= target, using short Picard runs of `probe_iterations` maps.
inline DeltaChoice choose_delta(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init,
                                PicardConfig cfg, double target, const RngStream& rng,
                                std::size_t probe_iterations = 4, std::size_t max_doublings = 8) {
  DeltaChoice out;
  out.initial_guess = delta_initial_guess(spec.alpha, cfg.eta, target, c.measure_dependent_drift);
  if (out.initial_guess == 0.0) {
    out.satisfied = true;
    return out;
  }
  cfg.max_iter = probe_iterations;
  cfg.tol = std::numeric_limits<double>::min();
  double delta = out.initial_guess;
  for (std::size_t j = 0; j <= max_doublings; ++j, delta *= 2.0) {
    cfg.delta = delta;
    const auto res = picard_iterate(c, spec, init, cfg, rng);
    const double r = worst_informative_ratio(res.report);
    out.sweep.emplace_back(delta, r);
    out.delta = delta;
    out.measured_ratio = r;
    if (r <= target) {
      out.satisfied = true;
      break;
    }
  }
  return out;
}

}  // namespace stablemv
