#pragma once

// Drift and diffusion coefficients b_t(x, mu), sigma_t(x, mu) with their
// declared structural constants, plus a sampling validator for the
// ellipticity, measure-Lipschitz and growth assumptions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/rng.hpp"

namespace stablemv {

/// Measure argument handed to coefficient callables: the measure itself and
/// whatever the coefficient's summary hook computed from it for this step.
struct MeasureArg {
  const EmpiricalMeasure& measure;
  std::span<const double> summary;
};

struct CoefficientConstants {
  double K = 2.0;     ///< ellipticity / Lipschitz constant, > 1
  double beta = 0.5;  ///< Hoelder exponent in (0, 1)
  double eta = 0.5;   ///< moment exponent in (0, alpha)
};

class CoefficientSet {
 public:
  using SummaryFn = std::function<std::vector<double>(double t, const EmpiricalMeasure&)>;
  using DriftFn = std::function<void(double t, std::span<const double> x, const MeasureArg&, std::span<double> out)>;
  /// Writes the d x d matrix row-major.
  using DiffusionFn = std::function<void(double t, std::span<const double> x, const MeasureArg&, std::span<double> out)>;

  std::string name = "custom";
  std::size_t dim = 1;
  CoefficientConstants constants;
  bool measure_dependent_drift = false;
  bool measure_dependent_diffusion = false;
  /// Required noise convention, if the model's constants depend on one.
  std::optional<Convention> required_convention;

  SummaryFn summary;  ///< optional; evaluated once per (step, measure)
  DriftFn drift;
  DiffusionFn diffusion;  ///< used when constant_diffusion is empty
  std::vector<double> constant_diffusion;  ///< d x d, row-major

  bool measure_dependent() const { return measure_dependent_drift || measure_dependent_diffusion; }

  std::vector<double> summarize(double t, const EmpiricalMeasure& mu) const {
    return summary ? summary(t, mu) : std::vector<double>{};
  }

  /// Structural checks: dimensions and declared constants.
  void check() const {
    require(dim >= 1, "coefficient dimension must be >= 1");
    require(static_cast<bool>(drift), "coefficient set has no drift");
    require(static_cast<bool>(diffusion) || constant_diffusion.size() == dim * dim,
            "coefficient set needs a diffusion function or a d x d constant matrix");
    require(constants.K > 1.0, "constant K must be > 1");
    require(constants.beta > 0.0 && constants.beta < 1.0, "constant beta must lie in (0, 1)");
    require(constants.eta > 0.0, "constant eta must be > 0");
  }

  void eval_drift(double t, std::span<const double> x, const MeasureArg& m, std::span<double> out) const {
    drift(t, x, m, out);
  }

  void eval_diffusion(double t, std::span<const double> x, const MeasureArg& m, std::span<double> out) const {
    if (!constant_diffusion.empty()) {
      std::copy(constant_diffusion.begin(), constant_diffusion.end(), out.begin());
      return;
    }
    diffusion(t, x, m, out);
  }
};

struct ValidationOptions {
  std::size_t tuples = 1000;
  double horizon = 1.0;
  double alpha = 1.0;
  std::size_t cloud_size = 32;
  std::uint64_t seed = 20240607;
};

struct ValidationReport {
  std::vector<std::string> warnings;
  double min_eigenvalue = INFINITY;   ///< of sigma sigma^*, over sampled tuples
  double max_eigenvalue = 0.0;
  double max_sigma_lipschitz = 0.0;   ///< |sigma(mu) - sigma(nu)|_F / W_eta(mu, nu)
  double max_growth_ratio = 0.0;      ///< |b| / (1 + |x| + mu(|.|^eta))
  bool ok() const { return warnings.empty(); }
};

/// Checks the structural assumptions on randomly sampled (t, x, mu) tuples.
/// Violations are reported as warnings; the growth constant is compared
/// against K.
inline ValidationReport validate_coefficients(const CoefficientSet& c, const ValidationOptions& opts = {}) {
  c.check();
  ValidationReport rep;
  const std::size_t d = c.dim;
  const double eta = std::min(c.constants.eta, 1.0);
  if (2.0 * c.constants.beta + opts.alpha <= 2.0)
    rep.warnings.push_back("2 beta + alpha = " + std::to_string(2.0 * c.constants.beta + opts.alpha) +
                           " is not > 2");
  if (c.constants.eta >= opts.alpha)
    rep.warnings.push_back("eta = " + std::to_string(c.constants.eta) + " is not below alpha");

  RandomSource src = RngStream(opts.seed, 0x7a11da7e).source();
  auto random_cloud = [&] {
    const double shift = 4.0 * (src.uniform_open() - 0.5);
    const double scale = 0.1 + 2.0 * src.uniform_open();
    Points p(opts.cloud_size, d);
    for (double& v : p.flat()) v = shift + scale * src.normal();
    return EmpiricalMeasure(std::move(p));
  };

  std::vector<double> x(d), b(d), s1(d * d), s2(d * d);
  for (std::size_t r = 0; r < opts.tuples; ++r) {
    const double t = opts.horizon * src.uniform_open();
    for (double& v : x) v = 3.0 * src.normal();
    const auto mu = random_cloud();
    const auto su = c.summarize(t, mu);
    const MeasureArg mu_arg{mu, su};

    c.eval_drift(t, x, mu_arg, b);
    c.eval_diffusion(t, x, mu_arg, s1);
    bool finite = true;
    for (double v : b) finite = finite && std::isfinite(v);
    for (double v : s1) finite = finite && std::isfinite(v);
    if (!finite) {
      rep.warnings.push_back("non-finite coefficient value at sampled tuple " + std::to_string(r));
      continue;
    }

    const double growth = norm(b) / (1.0 + norm(x) + mu.moment(c.constants.eta));
    rep.max_growth_ratio = std::max(rep.max_growth_ratio, growth);

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sig(s1.data(), d, d);
    const Eigen::MatrixXd a = sig * sig.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
    rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());

    if (c.measure_dependent_diffusion) {
      const auto nu = random_cloud();
      const auto sn = c.summarize(t, nu);
      c.eval_diffusion(t, x, MeasureArg{nu, sn}, s2);
      double diff = 0.0;
      for (std::size_t k = 0; k < d * d; ++k) diff += (s1[k] - s2[k]) * (s1[k] - s2[k]);
      const double w = wasserstein_kappa(mu, nu, eta);
      if (w > 0.0) rep.max_sigma_lipschitz = std::max(rep.max_sigma_lipschitz, std::sqrt(diff) / w);
    }
  }
  const double K = c.constants.K;
  if (rep.min_eigenvalue < 1.0 / K * (1.0 - 1e-12) || rep.max_eigenvalue > K * (1.0 + 1e-12))
    rep.warnings.push_back("sigma sigma^* eigenvalues [" + std::to_string(rep.min_eigenvalue) + ", " +
                           std::to_string(rep.max_eigenvalue) + "] leave [1/K, K]");
  if (rep.max_sigma_lipschitz > K)
    rep.warnings.push_back("sigma measure-Lipschitz ratio " + std::to_string(rep.max_sigma_lipschitz) + " exceeds K");
  if (rep.max_growth_ratio > K)
    rep.warnings.push_back("drift growth ratio " + std::to_string(rep.max_growth_ratio) + " exceeds K");
  return rep;
}

}  // namespace stablemv
