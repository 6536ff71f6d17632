#pragma once

// Exact samplers for rotationally invariant alpha-stable laws, the
// alpha/2-stable subordinator and the subordinated Brownian motion W_{S_t}.
//
// All samplers work in two stages: a time-one draw in the requested
// convention, then multiplication by the self-similarity factor
// t^{1/alpha} (t^{2/alpha} for the subordinator). Because pow(1, p) == 1,
// the time-t array is bit-identical to the time-one array times that
// factor when both are produced from the same RngStream.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "stablemv/core.hpp"
#include "stablemv/points.hpp"
#include "stablemv/rng.hpp"

namespace stablemv {

struct StableSpec {
  double alpha = 1.0;
  std::size_t dim = 1;
  Convention convention = Convention::GeneratorHalf;

  void validate() const {
    require(alpha > 0.0 && alpha < 2.0, "stability index alpha must lie in (0, 2)");
    require(dim >= 1, "dimension must be >= 1");
  }
};

namespace detail {

inline constexpr std::size_t kSampleChunk = 4096;

/// Symmetric stable variate with E exp(i xi X) = exp(-|xi|^alpha)
/// (Chambers-Mallows-Stuck).
inline double cms_symmetric(double alpha, RandomSource& src) {
  const double v = src.uniform_open(-0.5 * std::numbers::pi, 0.5 * std::numbers::pi);
  const double w = src.exponential();
  if (alpha == 1.0) return std::tan(v);
  const double a = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha);
  const double b = std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
  return a * b;
}

/// Positive stable variate of index beta in (0,1) with
/// E exp(-r Z) = exp(-r^beta) (Kanter's representation).
inline double positive_stable(double beta, RandomSource& src) {
  const double u = src.uniform_open(0.0, std::numbers::pi);
  const double w = src.exponential();
  const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
  const double b = std::pow(std::sin((1.0 - beta) * u) / w, (1.0 - beta) / beta);
  return a * b;
}

/// Scale mapping Z (Laplace exp(-r^{alpha/2})) to S_1 with
/// E exp(-r S_1) = exp(-(2r)^{alpha/2} / 2):  a^{alpha/2} = 2^{alpha/2 - 1}.
inline double subordinator_scale(double alpha) { return std::pow(2.0, 1.0 - 2.0 / alpha); }

/// Unit-time subordinator draw S_1.
inline double subordinator_unit(double alpha, RandomSource& src) {
  return positive_stable(0.5 * alpha, src) * subordinator_scale(alpha);
}

/// Unit-time W_{S_1} in the GeneratorHalf convention.
inline void subordinated_unit(double alpha, RandomSource& src, std::span<double> out) {
  const double root = std::sqrt(subordinator_unit(alpha, src));
  for (double& x : out) x = root * src.normal();
}

/// Factor converting a draw from convention `from` to convention `to`
/// at equal time: X_unit = 2^{1/alpha} X_half.
inline double convention_factor(double alpha, Convention from, Convention to) {
  if (from == to) return 1.0;
  return from == Convention::GeneratorHalf ? std::pow(2.0, 1.0 / alpha) : std::pow(2.0, -1.0 / alpha);
}

template <class Fn>
void for_each_chunk(std::size_t n, const RngStream& rng, Fn&& fn) {
  for (std::size_t begin = 0, chunk = 0; begin < n; begin += kSampleChunk, ++chunk) {
    RandomSource src = rng.substream(chunk).source();
    const std::size_t end = std::min(n, begin + kSampleChunk);
    for (std::size_t i = begin; i < end; ++i) fn(i, src);
  }
}

inline void check_sampling_args(double t, std::size_t n) {
  require(t > 0.0, "time t must be > 0");
  require(n >= 1, "sample count n must be >= 1");
}

}  // namespace detail

/// One unit-time draw of the symmetric stable vector in spec.convention.
/// Uses CMS for dim == 1 and the subordinated representation otherwise.
inline void draw_unit_stable(const StableSpec& spec, RandomSource& src, std::span<double> out) {
  if (spec.dim == 1) {
    const double f = detail::convention_factor(spec.alpha, Convention::Unit, spec.convention);
    out[0] = detail::cms_symmetric(spec.alpha, src) * f;
    return;
  }
  detail::subordinated_unit(spec.alpha, src, out);
  if (spec.convention == Convention::Unit) {
    const double f = detail::convention_factor(spec.alpha, Convention::GeneratorHalf, Convention::Unit);
    for (double& x : out) x *= f;
  }
}

/// n i.i.d. copies of L_t (rotationally invariant, spec.convention).
inline Points sample_sym_stable(const StableSpec& spec, double t, std::size_t n, const RngStream& rng) {
  spec.validate();
  detail::check_sampling_args(t, n);
  const double tf = std::pow(t, 1.0 / spec.alpha);
  Points out(n, spec.dim);
  detail::for_each_chunk(n, rng, [&](std::size_t i, RandomSource& src) {
    auto row = out[i];
    draw_unit_stable(spec, src, row);
    for (double& x : row) x *= tf;
  });
  return out;
}

/// n i.i.d. copies of S_t, the alpha/2-stable subordinator with
/// E exp(-r S_t) = exp(-t (2r)^{alpha/2} / 2).
inline std::vector<double> sample_subordinator(double alpha, double t, std::size_t n, const RngStream& rng) {
  require(alpha > 0.0 && alpha < 2.0, "subordinator needs alpha in (0, 2) so that alpha/2 < 1");
  detail::check_sampling_args(t, n);
  const double tf = std::pow(t, 2.0 / alpha);
  std::vector<double> out(n);
  detail::for_each_chunk(n, rng, [&](std::size_t i, RandomSource& src) {
    out[i] = detail::subordinator_unit(alpha, src) * tf;
  });
  return out;
}

/// n copies of W_{S_t}: standard Gaussian vectors scaled by sqrt(S_t).
/// The identity holds in the GeneratorHalf convention; a Unit spec is
/// rejected unless `rescale_convention` is set explicitly.
inline Points sample_subordinated(const StableSpec& spec, double t, std::size_t n, const RngStream& rng,
                                  bool rescale_convention = false) {
  spec.validate();
  detail::check_sampling_args(t, n);
  require(spec.convention == Convention::GeneratorHalf || rescale_convention,
          "subordinated sampling represents the generator_half convention; "
          "pass rescale_convention=true to rescale to unit");
  const double cf = detail::convention_factor(spec.alpha, Convention::GeneratorHalf, spec.convention);
  const double tf = std::pow(t, 1.0 / spec.alpha);
  Points out(n, spec.dim);
  detail::for_each_chunk(n, rng, [&](std::size_t i, RandomSource& src) {
    auto row = out[i];
    detail::subordinated_unit(spec.alpha, src, row);
    for (double& x : row) x = (x * cf) * tf;
  });
  return out;
}

/// Constant in front of |y|^{-d-alpha} dy in the Levy measure of the
/// GeneratorHalf process.
inline double levy_measure_constant(std::size_t d, double alpha) {
  require(d >= 1, "dimension must be >= 1");
  require(alpha > 0.0 && alpha < 2.0, "alpha must lie in (0, 2); alpha = 2 hits the Gamma(1 - alpha/2) pole");
  const double dd = static_cast<double>(d);
  return alpha * std::tgamma(0.5 * (dd + alpha)) /
         (std::pow(2.0, 2.0 - alpha) * std::pow(std::numbers::pi, 0.5 * dd) * std::tgamma(1.0 - 0.5 * alpha));
}

}  // namespace stablemv
