#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "stablemv/models.hpp"
#include "stablemv/regularity_probe.hpp"

using namespace stablemv;

namespace {

const StableSpec kCauchyHalf{1.0, 1, Convention::GeneratorHalf};

std::vector<double> log_lags(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = lo * std::pow(hi / lo, double(j) / double(n - 1));
  return out;
}

ProbeOptions exact_steps() {
  ProbeOptions o;
  o.steps = 1;
  return o;
}

// E|y + s C|^eta for a standard Cauchy C: integrals of u^eta against the
// density at -y + u and -y - u, the first split at its peak u = y.
double cauchy_u(double y, double s, double eta) {
  auto p = [s](double z) { return s / (std::numbers::pi * (s * s + z * z)); };
  boost::math::quadrature::exp_sinh<double> half_line;
  boost::math::quadrature::tanh_sinh<double> finite;
  auto right = [&](double u) { return std::pow(u, eta) * p(-y + u); };
  const double peak = std::max(y, 1.0);
  return finite.integrate(right, 0.0, peak) + half_line.integrate(right, peak, INFINITY) +
         half_line.integrate([&](double u) { return std::pow(u, eta) * p(-y - u); });
}

}  // namespace

TEST(RegularityProbe, HolderCheck) {
  const std::vector<double> c{0.0};
  EXPECT_LE(holder_ratio(abs_power_function(0.5), c, RngStream(1)), 1.0 + 1e-12);
  EXPECT_LE(holder_ratio(abs_power_function(1.0), c, RngStream(1)), 1.0 + 1e-12);
  TestFunction wrong = abs_power_function(0.5);
  wrong.eta = 0.8;
  EXPECT_GT(holder_ratio(wrong, c, RngStream(1)), 1.0);
  EXPECT_THROW(grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, wrong, log_lags(0.05, 2.0, 5), 1000,
                                RngStream(1), exact_steps()),
               InvalidArgument);
}

TEST(RegularityProbe, Preconditions) {
  const auto f = abs_power_function(0.5);
  EXPECT_THROW(grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, f, {0.1, 0.2, 0.5}, 1000, RngStream(1)),
               InvalidArgument);
  EXPECT_THROW(grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, f, {0.05, 0.5, 0.3, 2.0}, 1000,
                                RngStream(1)),
               InvalidArgument);
  EXPECT_THROW(frac_deriv_decay_probe(pure_stable_model(2), StableSpec{1.0, 2, Convention::GeneratorHalf}, nullptr, f,
                                      log_lags(0.05, 2.0, 4), 1000, RngStream(1)),
               InvalidArgument);
  EXPECT_THROW(grad_decay_probe(mean_field_eta_model(1, 0.5), kCauchyHalf, nullptr, f, log_lags(0.05, 2.0, 4), 1000,
                                RngStream(1)),
               InvalidArgument);
}

TEST(RegularityProbe, ConstantFunctionHasNoGradient) {
  const auto r = grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, constant_function(3.0, 0.5),
                                  log_lags(0.05, 2.0, 4), 2000, RngStream(2), exact_steps());
  for (double e : r.estimates) EXPECT_EQ(e, 0.0);
  EXPECT_TRUE(r.inconclusive);
  EXPECT_TRUE(std::isnan(r.fitted_slope));
}

TEST(RegularityProbe, ConstantFunctionHasNoFractionalDerivative) {
  ProbeOptions o = exact_steps();
  o.half_points = 50;
  const auto r = frac_deriv_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, constant_function(3.0, 0.5),
                                        log_lags(0.05, 2.0, 4), 2000, RngStream(3), o);
  for (double e : r.estimates) EXPECT_NEAR(e, 0.0, 1e-12);
}

TEST(RegularityProbe, GradientSlopePureStable) {
  const auto r = grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, abs_power_function(0.5),
                                  log_lags(0.05, 2.0, 6), 20000, RngStream(4), exact_steps());
  EXPECT_NEAR(r.fitted_slope, -0.5, 0.15);
  EXPECT_DOUBLE_EQ(r.target_exponent, -0.5);
  EXPECT_FALSE(r.inconclusive);
  EXPECT_LE(r.slope_ci_low, r.fitted_slope);
  EXPECT_GE(r.slope_ci_high, r.fitted_slope);
  for (std::size_t j = 0; j < r.lags.size(); ++j) EXPECT_LT(r.coupled_variance[j], r.uncoupled_variance[j]);
}

TEST(RegularityProbe, GradientSlopeLipschitzFunction) {
  const auto r = grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, abs_power_function(1.0),
                                  log_lags(0.05, 2.0, 6), 20000, RngStream(5), exact_steps());
  EXPECT_NEAR(r.fitted_slope, 0.0, 0.15);
}

// At lag 2 the generator-half Cauchy increment has scale 1; the finite
// difference of the quadrature value of P f is the oracle.
TEST(RegularityProbe, GradientMatchesQuadrature) {
  const std::vector<double> lags{0.05, 0.5, 2.0};
  const auto r = grad_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, abs_power_function(0.5), lags, 40000,
                                  RngStream(6), exact_steps());
  const double s = 1.0, x = 2.0, h = 0.1 * 2.0;
  const double oracle = (cauchy_u(x + h, s, 0.5) - cauchy_u(x - h, s, 0.5)) / (2.0 * h);
  EXPECT_NEAR(r.estimates[2], oracle, 4.0 * r.std_errors[2]);
}

TEST(RegularityProbe, FractionalSlopePureStable) {
  ProbeOptions o = exact_steps();
  o.half_points = 200;
  o.grid_factor = 0.1;
  const auto r = frac_deriv_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, abs_power_function(0.5),
                                        log_lags(0.05, 2.0, 5), 5000, RngStream(7), o);
  EXPECT_NEAR(r.fitted_slope, -0.5, 0.2);
  EXPECT_FALSE(r.inconclusive);
  for (double c : r.cutoff_change) EXPECT_LE(c, 0.2);
}

TEST(RegularityProbe, FractionalValueMatchesQuadrature) {
  const auto r = frac_deriv_decay_probe(pure_stable_model(1), kCauchyHalf, nullptr, abs_power_function(0.5),
                                        {0.05, 0.5, 2.0}, 10000, RngStream(8), exact_steps());
  // lag 2: u(y) = E|y + C|^{1/2} and D^1 u(0) = 2 int_0^inf 2 |u(y) - u(0)| y^{-2} dy
  const double u0 = cauchy_u(0.0, 1.0, 0.5);
  // in v = log y; beyond Y, u(y) = sqrt(y) up to O(y^{-1/2}) terms
  auto integrand = [&](double v) {
    const double y = std::exp(v);
    return 2.0 * std::abs(cauchy_u(y, 1.0, 0.5) - u0) / y;
  };
  const double Y = 1e4;
  const double tail = 4.0 * (2.0 / std::sqrt(Y) - u0 / Y);
  const double body =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, std::log(1e-6), std::log(Y), 10, 1e-9);
  const double oracle = 2.0 * (body + tail);
  EXPECT_NEAR(r.estimates[2], oracle, 4.0 * r.std_errors[2] + 0.01 * oracle);
}
