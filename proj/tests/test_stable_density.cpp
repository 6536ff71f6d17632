#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "stablemv/stable_density.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

using namespace stablemv;

namespace {

double cauchy(double x, double scale) { return scale / (std::numbers::pi * (scale * scale + x * x)); }

std::vector<double> uniform_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace

TEST(StableDensity, CauchyAtOrigin) {
  const std::vector<double> x{0.0};
  EXPECT_NEAR(stable_density_1d(1.0, Convention::Unit, 1.0, x).values[0], 1.0 / std::numbers::pi, 1e-14);
}

TEST(StableDensity, MatchesCauchyEverywhere) {
  for (double x : {0.0, 0.01, 0.3, 1.0, 1.7, 3.0, 10.0, 55.0, 400.0}) {
    EXPECT_NEAR(stable_density_at(1.0, Convention::Unit, 1.0, x), cauchy(x, 1.0), 1e-13 * (1.0 + cauchy(x, 1.0)));
    // generator-half convention at t = 2 is the standard Cauchy; at t = 1 the scale is 1/2
    EXPECT_NEAR(stable_density_at(1.0, Convention::GeneratorHalf, 2.0, x), cauchy(x, 1.0), 1e-13);
    EXPECT_NEAR(stable_density_at(1.0, Convention::GeneratorHalf, 1.0, x), cauchy(x, 0.5), 1e-12);
  }
}

TEST(StableDensity, CauchyTailMass) {
  for (double a : {0.0, 0.5, 1.0, 2.0, 7.0, 100.0})
    EXPECT_NEAR(stable_upper_tail_standard(1.0, a), 0.5 - std::atan(a) / std::numbers::pi, 1e-13) << a;
}

TEST(StableDensity, SymmetricOnSymmetricGrids) {
  for (double alpha : {0.55, 1.0, 1.6}) {
    const double h = max_density_spacing(alpha, Convention::GeneratorHalf, 1.0);
    auto g = uniform_grid(-120.0 * h, 120.0 * h, 241);
    for (std::size_t i = 0; i < 120; ++i) g[240 - i] = -g[i];
    const auto r = stable_density_1d(alpha, Convention::GeneratorHalf, 1.0, g);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(r.values[i], r.values[g.size() - 1 - i]);
  }
}

TEST(StableDensity, NormalizesWithTail) {
  for (double alpha : {0.4, 0.6, 0.75, 1.0, 1.3, 1.8}) {
    for (Convention conv : {Convention::GeneratorHalf, Convention::Unit}) {
      const double t = 0.8;
      const double s = stable_scale(alpha, conv, t);
      const double h = max_density_spacing(alpha, conv, t);
      const auto half = static_cast<std::size_t>(std::ceil(8.0 * s / h));
      const auto g = uniform_grid(-static_cast<double>(half) * h, static_cast<double>(half) * h, 2 * half + 1);
      const auto r = stable_density_1d(alpha, conv, t, g);
      EXPECT_NEAR(r.total_mass, 1.0, 1e-6) << alpha << " " << to_string(conv);
      for (double v : r.values) EXPECT_GE(v, 0.0);
    }
  }
}

TEST(StableDensity, NonuniformGridUsesTrapezoid) {
  std::vector<double> g;
  for (double x = -5.0; x <= 5.0; x += (std::abs(x) < 1.0 ? 0.01 : 0.02)) g.push_back(x);
  ASSERT_LE(0.02, max_density_spacing(1.2, Convention::Unit, 1.0));
  const auto r = stable_density_1d(1.2, Convention::Unit, 1.0, g);
  EXPECT_NEAR(r.total_mass, 1.0, 1e-4);
}

TEST(StableDensity, CoarseGridIsSignaled) {
  const auto g = uniform_grid(-10.0, 10.0, 11);  // spacing 2
  EXPECT_THROW(stable_density_1d(1.0, Convention::Unit, 1.0, g), GridTooCoarse);
  // the same spacing is fine at a large time
  EXPECT_NO_THROW(stable_density_1d(1.0, Convention::Unit, 100.0, g));
  EXPECT_THROW(stable_density_1d(1.0, Convention::Unit, 1.0, std::vector<double>{1.0, 0.5}), InvalidArgument);
  EXPECT_THROW(stable_density_1d(1.0, Convention::Unit, 1.0, std::vector<double>{0.0, INFINITY}), InvalidArgument);
  EXPECT_THROW(stable_density_1d(1.0, Convention::Unit, 0.0, std::vector<double>{0.0}), InvalidArgument);
}

TEST(StableDensity, SeriesAndFourierAgreeInOverlap) {
  for (double alpha : {0.5, 0.75, 0.9}) {
    for (double z : {1.5, 3.0, 8.0}) {
      const auto series = detail::stable_tail_series(alpha, z, false);
      EXPECT_NEAR(series.value, detail::stable_density_fourier(alpha, z), 1e-12) << alpha << " " << z;
      const auto tail = detail::stable_tail_series(alpha, z, true);
      EXPECT_NEAR(tail.value, detail::stable_upper_tail_fourier(alpha, z), 1e-12) << alpha << " " << z;
    }
  }
}

// Independent route: probability of intervals from samples vs integrated density.
TEST(StableDensity, AgreesWithSampler) {
  for (double alpha : {0.7, 1.5}) {
    const std::size_t n = 400000;
    const auto x = sample_sym_stable(StableSpec{alpha, 1, Convention::Unit}, 1.0, n, RngStream(55));
    const double a = 0.2, b = 1.1;
    std::vector<double> in(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = (x[i][0] > a && x[i][0] <= b) ? 1.0 : 0.0;
    const auto est = mean_with_se(in);
    const double exact = stable_upper_tail_standard(alpha, a) - stable_upper_tail_standard(alpha, b);
    EXPECT_NEAR(est.mean, exact, 4.0 * est.std_error) << alpha;
  }
}
