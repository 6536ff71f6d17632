#pragma once

// Non-uniqueness at the boundary alpha + eta = 1 for
//   dX_t = b(Law X_t) dt + rho dL_t,   b(gamma) = int sgn(y)|y|^{1-alpha} gamma(dy),
// with L in the unit convention and X_0 = 0. If c solves
//   g(c, rho) = c - alpha E[sgn(c + rho L_1)|c + rho L_1|^{1-alpha}] = 0,
// both rho L_t and c t^{1/alpha} + rho L_t are solutions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/models.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_density.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

namespace stablemv {

enum class RootMethod { Quadrature, MonteCarlo };

inline std::string to_string(RootMethod m) { return m == RootMethod::Quadrature ? "QUADRATURE" : "MONTE_CARLO"; }

inline RootMethod root_method_from_string(const std::string& s) {
  if (s == "QUADRATURE" || s == "quadrature") return RootMethod::Quadrature;
  if (s == "MONTE_CARLO" || s == "monte_carlo") return RootMethod::MonteCarlo;
  throw InvalidArgument("unknown root method '" + s + "' (expected QUADRATURE or MONTE_CARLO)");
}

struct GEvalOptions {
  RootMethod method = RootMethod::Quadrature;
  std::size_t mc_samples = 1'000'000;
  double quad_tol = 1e-11;  ///< relative tolerance per quadrature piece
};

struct GValue {
  double value = 0.0;
  double error = 0.0;  ///< quadrature error bound or Monte Carlo standard error
  std::size_t evaluations = 0;
};

namespace detail {

inline void check_counterexample_alpha(double alpha) {
  require(alpha > 0.5 && alpha < 1.0, "the counterexample needs alpha in (1/2, 1)");
}

/// E[sgn(c + rho L)|c + rho L|^{1-alpha}] for the unit-convention L_1 and
/// c > 0, rho > 0. With y = c + rho x and q(z) = p(z / rho) / rho the
/// positive and negative halves fold into
///   int_0^inf y^{1-alpha} (q(y - c) - q(y + c)) dy,
/// split around the peak at y = c.
inline GValue drift_expectation_quadrature(double c, double rho, double alpha, double rel_tol) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  GValue out;
  auto q = [&](double z) { return stable_density_standard(alpha, z / rho) / rho; };
  auto f = [&](double y) {
    ++out.evaluations;
    if (y <= 0.0) return 0.0;
    return std::pow(y, 1.0 - alpha) * (q(y - c) - q(y + c));
  };
  const double w = 10.0 * rho;
  std::vector<double> cuts{0.0};
  if (c - w > 0.0) cuts.push_back(c - w);
  cuts.push_back(c);
  cuts.push_back(c + w);
  double total = 0.0, err = 0.0;
  for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
    double e = 0.0;
    total += GK::integrate(f, cuts[j], cuts[j + 1], 15, rel_tol, &e);
    err += e;
  }
  double e = 0.0;
  total += GK::integrate(f, cuts.back(), std::numeric_limits<double>::infinity(), 15, rel_tol, &e);
  err += e;
  out.value = total;
  // density evaluations carry an absolute error near 1e-13
  out.error = err + 1e-12 * (1.0 + std::abs(total));
  return out;
}

/// Unit-convention L_1 draws shared by every Monte Carlo evaluation of g,
/// so that g(., rho) is a deterministic, continuous function of c.
inline std::vector<double> unit_draws(double alpha, std::size_t n, const RngStream& rng) {
  std::vector<double> out(n);
  for_each_chunk(n, rng, [&](std::size_t i, RandomSource& src) { out[i] = cms_symmetric(alpha, src); });
  return out;
}

inline GValue drift_expectation_mc(double c, double rho, double alpha, std::span<const double> draws) {
  std::vector<double> h(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) h[i] = signed_pow(c + rho * draws[i], 1.0 - alpha);
  const auto m = mean_with_se(h);
  return {m.mean, m.std_error, draws.size()};
}

}  // namespace detail

/// g(c, rho) = c - alpha E[sgn(c + rho L_1)|c + rho L_1|^{1-alpha}].
/// Monte Carlo standard errors are finite only for alpha > 2/3.
inline GValue g_eval(double c, double rho, double alpha, const GEvalOptions& opts, const RngStream& rng) {
  detail::check_counterexample_alpha(alpha);
  require(c > 0.0 && std::isfinite(c), "c must be > 0");
  require(rho >= 0.0 && std::isfinite(rho), "rho must be >= 0");
  if (rho == 0.0) return {c - alpha * std::pow(c, 1.0 - alpha), 0.0, 1};
  GValue e;
  if (opts.method == RootMethod::Quadrature) {
    require(opts.quad_tol > 0.0, "quadrature tolerance must be > 0");
    e = detail::drift_expectation_quadrature(c, rho, alpha, opts.quad_tol);
  } else {
    require(opts.mc_samples >= 2, "Monte Carlo needs at least 2 samples");
    const auto draws = detail::unit_draws(alpha, opts.mc_samples, rng);
    e = detail::drift_expectation_mc(c, rho, alpha, draws);
  }
  return {c - alpha * e.value, alpha * e.error, e.evaluations};
}

struct RootFindReport {
  double alpha = 0.0;
  double rho = 0.0;            ///< value used, after any halving
  double rho_requested = 0.0;
  double c = 0.0;
  double residual = 0.0;        ///< |g(c, rho)|
  double residual_error = 0.0;  ///< estimator error at c
  double tol = 0.0;
  RootMethod method = RootMethod::Quadrature;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  std::size_t evaluations = 0;
  std::size_t bisection_steps = 0;
  std::size_t rho_halvings = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct RootFindOptions {
  GEvalOptions eval;
  std::size_t max_halvings = 10;
  std::size_t max_bisections = 200;
  double bracket_factor = 2.0;  ///< c1 = c* / factor, c2 = c* factor with c* = alpha^{1/alpha}
};

/// Bisection for g(., rho) = 0 on [c1, c2] with c1^alpha < alpha < c2^alpha.
/// The bracket must be sign-definite beyond the estimator error; rho is
/// halved otherwise. Success means |g| + error < tol.
inline RootFindReport solve_fixed_point(double alpha, double rho, double tol, const RootFindOptions& opts,
                                        const RngStream& rng) {
  detail::check_counterexample_alpha(alpha);
  require(tol > 0.0 && std::isfinite(tol), "tolerance must be > 0");
  require(rho >= 0.0 && std::isfinite(rho), "rho must be >= 0");
  require(opts.bracket_factor > 1.0, "bracket factor must be > 1");

  RootFindReport rep;
  rep.alpha = alpha;
  rep.rho = rep.rho_requested = rho;
  rep.tol = tol;
  rep.method = opts.eval.method;
  const double c_star = std::pow(alpha, 1.0 / alpha);
  rep.bracket_low = c_star / opts.bracket_factor;
  rep.bracket_high = c_star * opts.bracket_factor;
  if (rho == 0.0) {
    rep.c = c_star;
    rep.converged = true;
    rep.evaluations = 0;
    return rep;
  }

  std::vector<double> draws;
  auto g = [&](double c) {
    GValue v;
    if (opts.eval.method == RootMethod::MonteCarlo) {
      if (draws.empty()) {
        require(opts.eval.mc_samples >= 2, "Monte Carlo needs at least 2 samples");
        draws = detail::unit_draws(alpha, opts.eval.mc_samples, rng);
      }
      const auto e = detail::drift_expectation_mc(c, rep.rho, alpha, draws);
      v = {c - alpha * e.value, alpha * e.error, e.evaluations};
    } else {
      v = g_eval(c, rep.rho, alpha, opts.eval, rng);
    }
    rep.evaluations += v.evaluations;
    return v;
  };

  GValue lo, hi;
  for (;;) {
    lo = g(rep.bracket_low);
    hi = g(rep.bracket_high);
    if (lo.value + lo.error < 0.0 && hi.value - hi.error > 0.0) break;
    if (rep.rho_halvings >= opts.max_halvings)
      throw NumericalError("bracket [" + std::to_string(rep.bracket_low) + ", " + std::to_string(rep.bracket_high) +
                           "] never sign-definite at the requested precision (last rho " + std::to_string(rep.rho) +
                           ")");
    rep.rho *= 0.5;
    ++rep.rho_halvings;
    rep.warnings.push_back("bracket signs failed; rho halved to " + std::to_string(rep.rho));
  }

  double a = rep.bracket_low, b = rep.bracket_high;
  GValue mid{};
  double c = 0.5 * (a + b);
  for (; rep.bisection_steps < opts.max_bisections; ++rep.bisection_steps) {
    c = 0.5 * (a + b);
    mid = g(c);
    if (std::abs(mid.value) + mid.error < tol && b - a < tol) break;
    if (mid.value < 0.0)
      a = c;
    else
      b = c;
    if (b - a <= 1e-15 * c) break;
  }
  rep.c = c;
  rep.residual = std::abs(mid.value);
  rep.residual_error = mid.error;
  rep.converged = rep.residual + rep.residual_error < tol;
  if (!rep.converged)
    throw NumericalError("estimator precision insufficient: |g| = " + std::to_string(rep.residual) + " with error " +
                         std::to_string(rep.residual_error) + " does not meet tol " + std::to_string(tol));
  return rep;
}

inline RootFindReport solve_fixed_point(double alpha, double rho, double tol, RootMethod method, const RngStream& rng) {
  RootFindOptions opts;
  opts.eval.method = method;
  return solve_fixed_point(alpha, rho, tol, opts, rng);
}

inline constexpr std::uint64_t kSeparationStream = 0x73657061ULL;

struct NodeCheck {
  double t = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double target = 0.0;
  double allowance = 0.0;  ///< accepted |estimate - target|
  bool ok = false;
};

struct EulerResidual {
  double defect = 0.0;      ///< X_T - X_0 - sum_k b(Law X_{t_k}) dt_k - rho L_T
  double reference = 0.0;   ///< the same defect with the exact drift (time discretization only)
  double std_error = 0.0;
  double eta_moment = 0.0;  ///< max_k |cumulative defect|^eta
  bool consistent = false;
};

struct VerifyOptions {
  double eta = std::numeric_limits<double>::quiet_NaN();  ///< default 1 - alpha
  double se_multiple = 3.0;
  double separation_multiple = 5.0;
  std::size_t wasserstein_points = 100'000;  ///< independent draws per law for the separation check
};

struct TwoSolutionReport {
  double alpha = 0.0, c = 0.0, rho = 0.0, eta = 0.0, T = 0.0;
  std::size_t particles = 0;
  std::vector<NodeCheck> drift;      ///< (i) b(Law(c s^{1/alpha} + rho L_s)) vs (c/alpha) s^{1/alpha-1}
  std::vector<double> scaled_drift;  ///< b / s^{1/alpha-1}, constant in s
  double integrated_drift = 0.0;
  double integrated_drift_se = 0.0;
  double integrated_drift_allowance = 0.0;
  bool drift_ok = false;
  bool integrated_ok = false;
  std::vector<NodeCheck> symmetric;  ///< (ii) b(Law(rho L_s)) vs 0
  bool symmetric_ok = false;
  EulerResidual symmetric_residual;  ///< (iii)
  EulerResidual shifted_residual;
  double separation = 0.0;           ///< (iv) W_eta between the laws at T
  double noise_floor = 0.0;
  double translation_bound = 0.0;    ///< c^eta T^{eta/alpha}
  bool separated = false;
  bool within_bound = false;
  std::vector<double> symmetric_law_T;
  std::vector<double> shifted_law_T;

  bool all_ok() const {
    return drift_ok && integrated_ok && symmetric_ok && symmetric_residual.consistent && shifted_residual.consistent &&
           separated && within_bound;
  }
};

/// Checks both candidate solutions on the grid with N particles driven by
/// one noise tape.
inline TwoSolutionReport verify_two_solutions(const RootFindReport& root, const TimeGrid& grid, std::size_t N,
                                              const RngStream& rng, const VerifyOptions& opts = {}) {
  require(root.converged && root.residual + root.residual_error < root.tol,
          "root report does not meet its tolerance; run solve_fixed_point first");
  require(root.rho > 0.0, "verification needs rho > 0");
  require(N >= 2, "verification needs N >= 2 particles");
  require(opts.wasserstein_points >= 2, "Wasserstein check needs at least 2 points");
  require(opts.se_multiple > 0.0 && opts.separation_multiple > 0.0, "check multiples must be > 0");
  const double alpha = root.alpha, c = root.c, rho = root.rho;
  detail::check_counterexample_alpha(alpha);
  const double eta = std::isnan(opts.eta) ? 1.0 - alpha : opts.eta;
  require(eta > 0.0 && eta <= 1.0, "eta must lie in (0, 1]");

  TwoSolutionReport rep;
  rep.alpha = alpha;
  rep.c = c;
  rep.rho = rho;
  rep.eta = eta;
  rep.T = grid.horizon();
  rep.particles = N;

  const StableSpec spec{alpha, 1, Convention::Unit};
  const auto tape = NoiseTape::generate(spec, grid, N, rng.substream(detail::kNoiseStream));
  const std::size_t M = grid.steps();
  const double p = 1.0 / alpha - 1.0;
  // the drift estimate uses c - g = alpha E[...], so targets carry the root residual
  const double g_slack = (root.residual + root.residual_error) / alpha;

  std::vector<double> L(N, 0.0), h1(N), h2(N);
  std::vector<double> integral(N, 0.0), cum1(N, 0.0), cum2(N, 0.0);
  double max_defect1 = 0.0, max_defect2 = 0.0, ref2 = 0.0;
  auto trap_weight = [&](std::size_t k) {
    double w = 0.0;
    if (k > 0) w += 0.5 * (grid[k] - grid[k - 1]);
    if (k < M) w += 0.5 * (grid[k + 1] - grid[k]);
    return w;
  };
  double trap_target = 0.0;
  for (std::size_t k = 0; k <= M; ++k) {
    const double t = grid[k];
    const double shift = c * std::pow(t, 1.0 / alpha);
    for (std::size_t i = 0; i < N; ++i) {
      h1[i] = signed_pow(rho * L[i], 1.0 - alpha);
      h2[i] = signed_pow(shift + rho * L[i], 1.0 - alpha);
    }
    const auto m1 = mean_with_se(h1);
    const auto m2 = mean_with_se(h2);
    const double target = (c / alpha) * std::pow(t, p);
    if (k > 0) {
      NodeCheck d{t, m2.mean, m2.std_error, target, opts.se_multiple * m2.std_error + g_slack * std::pow(t, p), false};
      d.ok = std::abs(d.estimate - d.target) <= d.allowance;
      rep.drift.push_back(d);
      rep.scaled_drift.push_back(m2.mean / std::pow(t, p));
      NodeCheck s{t, m1.mean, m1.std_error, 0.0, opts.se_multiple * m1.std_error, false};
      s.ok = std::abs(s.estimate) <= s.allowance;
      rep.symmetric.push_back(s);
    }
    const double w = trap_weight(k);
    trap_target += w * target;
    for (std::size_t i = 0; i < N; ++i) integral[i] += w * h2[i];

    // left-point Euler defects on [0, t_k]
    double mean1 = 0.0, mean2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      mean1 += cum1[i];
      mean2 += cum2[i];
    }
    mean1 /= double(N);
    mean2 /= double(N);
    max_defect1 = std::max(max_defect1, std::abs(-mean1));
    max_defect2 = std::max(max_defect2, std::abs(shift - mean2));
    if (k == M) break;
    const double dt = (grid[k + 1] - grid[k]);
    ref2 += target * dt;
    for (std::size_t i = 0; i < N; ++i) {
      cum1[i] += h1[i] * dt;
      cum2[i] += h2[i] * dt;
      L[i] += tape.increment(i, k)[0];
    }
  }

  auto all_ok = [](const std::vector<NodeCheck>& v) {
    return std::all_of(v.begin(), v.end(), [](const NodeCheck& n) { return n.ok; });
  };
  rep.drift_ok = all_ok(rep.drift);
  rep.symmetric_ok = all_ok(rep.symmetric);

  const double T_pow = std::pow(rep.T, 1.0 / alpha);
  const auto I = mean_with_se(integral);
  rep.integrated_drift = I.mean;
  rep.integrated_drift_se = I.std_error;
  const double discretization = std::abs(trap_target - c * T_pow);
  rep.integrated_drift_allowance = opts.se_multiple * I.std_error + discretization + g_slack * alpha * T_pow;
  rep.integrated_ok = std::abs(I.mean - c * T_pow) <= rep.integrated_drift_allowance;

  const auto D1 = mean_with_se(cum1);
  rep.symmetric_residual.defect = -D1.mean;
  rep.symmetric_residual.reference = 0.0;
  rep.symmetric_residual.std_error = D1.std_error;
  rep.symmetric_residual.eta_moment = std::pow(max_defect1, eta);
  rep.symmetric_residual.consistent =
      std::abs(rep.symmetric_residual.defect) <= opts.se_multiple * D1.std_error;
  const auto D2 = mean_with_se(cum2);
  rep.shifted_residual.defect = c * T_pow - D2.mean;
  rep.shifted_residual.reference = c * T_pow - ref2;
  rep.shifted_residual.std_error = D2.std_error;
  rep.shifted_residual.eta_moment = std::pow(max_defect2, eta);
  rep.shifted_residual.consistent = std::abs(rep.shifted_residual.defect - rep.shifted_residual.reference) <=
                                    opts.se_multiple * D2.std_error + g_slack * alpha * T_pow;

  rep.symmetric_law_T.resize(N);
  rep.shifted_law_T.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    rep.symmetric_law_T[i] = rho * L[i];
    rep.shifted_law_T[i] = c * T_pow + rho * L[i];
  }

  // (iv) on independent samples of both laws at T
  const std::size_t n = opts.wasserstein_points;
  const RngStream sep = rng.substream(kSeparationStream);
  const double scale = std::pow(rep.T, 1.0 / alpha);
  auto draw_law = [&](std::uint64_t stream, double shift) {
    auto draws = detail::unit_draws(alpha, n, sep.substream(stream));
    for (double& x : draws) x = shift + rho * scale * x;
    return EmpiricalMeasure::from_values(std::move(draws));
  };
  const auto a1 = draw_law(0, 0.0), a2 = draw_law(1, 0.0);
  const auto b1 = draw_law(2, c * T_pow), b2 = draw_law(3, c * T_pow);
  rep.separation = wasserstein_kappa(a1, b1, eta);
  rep.noise_floor = 0.5 * (wasserstein_kappa(a1, a2, eta) + wasserstein_kappa(b1, b2, eta));
  rep.translation_bound = std::pow(c * T_pow, eta);
  rep.separated = rep.separation >= opts.separation_multiple * rep.noise_floor;
  rep.within_bound = rep.separation <= rep.translation_bound;
  return rep;
}

}  // namespace stablemv
