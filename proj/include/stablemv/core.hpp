#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stablemv {

/// Violated precondition on user-supplied input.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not reach its requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistical estimate has too little signal above its noise floor.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Characteristic-function normalization of a symmetric stable law.
///   GeneratorHalf: E exp(i<xi, L_t>) = exp(-t |xi|^alpha / 2)
///   Unit:          E exp(i<xi, L_t>) = exp(-t |xi|^alpha)
enum class Convention { GeneratorHalf, Unit };

inline const char* to_string(Convention c) {
  return c == Convention::GeneratorHalf ? "generator_half" : "unit";
}

inline Convention convention_from_string(const std::string& s) {
  if (s == "generator_half" || s == "GENERATOR_HALF" || s == "gh") return Convention::GeneratorHalf;
  if (s == "unit" || s == "UNIT") return Convention::Unit;
  throw InvalidArgument("unknown convention '" + s + "' (expected generator_half or unit)");
}

/// Coefficient s in exp(-s |xi|^alpha) at time t.
inline double charfn_rate(Convention c, double t) {
  return c == Convention::GeneratorHalf ? 0.5 * t : t;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// sgn(x) |x|^p
inline double signed_pow(double x, double p) {
  return x == 0.0 ? 0.0 : sgn(x) * std::pow(std::abs(x), p);
}

}  // namespace stablemv
