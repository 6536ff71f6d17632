#pragma once

// Built-in coefficient catalog:
//   pure_stable     b = 0,                      sigma = I
//   stable_ou       b = -x,                     sigma = I
//   mean_field_eta  b = -x + tanh(mu(|.|^eta)),  sigma = I   (Lipschitz test model)
//   counterexample  b = int sgn(y)|y|^{1-alpha} mu(dy), sigma = rho, d = 1

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "stablemv/coefficients.hpp"
#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"

namespace stablemv {

inline const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"pure_stable", "stable_ou", "mean_field_eta", "counterexample"};
  return names;
}

/// b(gamma) = sum_i w_i sgn(x_i) |x_i|^{1-alpha} for a one-dimensional gamma.
inline double drift_functional(const EmpiricalMeasure& gamma, double alpha) {
  require(gamma.dim() == 1, "the counterexample drift is defined for d = 1 only");
  require(alpha > 0.5 && alpha < 1.0, "the counterexample needs alpha in (1/2, 1)");
  return gamma.integrate([alpha](std::span<const double> x) { return signed_pow(x[0], 1.0 - alpha); });
}

namespace detail {

inline std::vector<double> identity_matrix(std::size_t d, double s = 1.0) {
  std::vector<double> m(d * d, 0.0);
  for (std::size_t k = 0; k < d; ++k) m[k * d + k] = s;
  return m;
}

}  // namespace detail

inline CoefficientSet pure_stable_model(std::size_t d) {
  CoefficientSet c;
  c.name = "pure_stable";
  c.dim = d;
  c.drift = [](double, std::span<const double>, const MeasureArg&, std::span<double> out) {
    for (double& v : out) v = 0.0;
  };
  c.constant_diffusion = detail::identity_matrix(d);
  return c;
}

inline CoefficientSet stable_ou_model(std::size_t d) {
  CoefficientSet c;
  c.name = "stable_ou";
  c.dim = d;
  c.drift = [](double, std::span<const double> x, const MeasureArg&, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -x[k];
  };
  c.constant_diffusion = detail::identity_matrix(d);
  return c;
}

/// b(x, mu) = -x + tanh(mu(|.|^eta)) in every coordinate, sigma = I.
/// Lipschitz in mu for W_eta since |.|^eta has eta-Hoelder seminorm 1.
inline CoefficientSet mean_field_eta_model(std::size_t d, double eta) {
  require(eta > 0.0 && eta <= 1.0, "mean_field_eta needs eta in (0, 1]");
  CoefficientSet c;
  c.name = "mean_field_eta";
  c.dim = d;
  c.constants.eta = eta;
  c.measure_dependent_drift = true;
  c.summary = [eta](double, const EmpiricalMeasure& mu) { return std::vector<double>{std::tanh(mu.moment(eta))}; };
  c.drift = [](double, std::span<const double> x, const MeasureArg& m, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -x[k] + m.summary[0];
  };
  c.constant_diffusion = detail::identity_matrix(d);
  return c;
}

/// dX = b(Law X) dt + rho dL with the unit-convention noise.
inline CoefficientSet counterexample_model(double alpha, double rho) {
  require(alpha > 0.5 && alpha < 1.0, "the counterexample needs alpha in (1/2, 1)");
  require(rho > 0.0, "rho must be > 0");
  CoefficientSet c;
  c.name = "counterexample";
  c.dim = 1;
  c.constants.eta = 1.0 - alpha;
  c.constants.K = std::max({2.0, rho * rho * 1.000001, 1.000001 / (rho * rho)});
  c.measure_dependent_drift = true;
  c.required_convention = Convention::Unit;
  c.summary = [alpha](double, const EmpiricalMeasure& mu) { return std::vector<double>{drift_functional(mu, alpha)}; };
  c.drift = [](double, std::span<const double>, const MeasureArg& m, std::span<double> out) { out[0] = m.summary[0]; };
  c.constant_diffusion = {rho};
  return c;
}

struct ModelParams {
  std::size_t dim = 1;
  double eta = 0.5;
  double alpha = 0.75;  ///< counterexample only
  double rho = 0.05;    ///< counterexample only
};

inline CoefficientSet make_model(const std::string& name, const ModelParams& p) {
  if (name == "pure_stable") return pure_stable_model(p.dim);
  if (name == "stable_ou") return stable_ou_model(p.dim);
  if (name == "mean_field_eta") return mean_field_eta_model(p.dim, p.eta);
  if (name == "counterexample") {
    require(p.dim == 1, "counterexample model is one-dimensional");
    return counterexample_model(p.alpha, p.rho);
  }
  throw InvalidArgument("unknown model '" + name + "' (expected pure_stable, stable_ou, mean_field_eta or counterexample)");
}

}  // namespace stablemv
