#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "stablemv/models.hpp"
#include "stablemv/picard.hpp"

using namespace stablemv;

namespace {

const StableSpec kSpec{0.9, 1, Convention::GeneratorHalf};

PicardConfig small_config(double delta) {
  PicardConfig cfg;
  cfg.eta = 0.6;
  cfg.delta = delta;
  cfg.tol = 1e-4;
  cfg.max_iter = 10;
  cfg.particles = 4000;
  cfg.grid = TimeGrid::uniform(1.0, 50);
  return cfg;
}

}  // namespace

TEST(PicardConfig, Validation) {
  const auto model = mean_field_eta_model(1, 0.6);
  auto cfg = small_config(4.0);
  EXPECT_NO_THROW(cfg.validate(model, kSpec));
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.validate(model, kSpec), InvalidArgument);
  cfg = small_config(4.0);
  cfg.eta = 0.95;
  EXPECT_THROW(cfg.validate(model, kSpec), InvalidArgument);
  // alpha + eta <= 1 is rejected only for measure-dependent drift
  cfg = small_config(4.0);
  cfg.eta = 0.3;
  const StableSpec low{0.6, 1, Convention::GeneratorHalf};
  EXPECT_THROW(cfg.validate(model, low), InvalidArgument);
  EXPECT_NO_THROW(cfg.validate(stable_ou_model(1), low));
}

TEST(ChooseDelta, InitialGuess) {
  EXPECT_NEAR(delta_initial_guess(1.0, 0.5, 0.5), 16.0, 1e-9);
  const double d = delta_initial_guess(0.9, 0.6, 0.5);
  EXPECT_NEAR(theoretical_factor(0.9, 0.6, d), 0.5, 1e-12);
  EXPECT_EQ(delta_initial_guess(1.0, 0.5, 2.0), 0.0);
  EXPECT_EQ(delta_initial_guess(1.0, 0.5, 7.0), 0.0);
  EXPECT_THROW(delta_initial_guess(0.6, 0.3, 0.5), InvalidArgument);
  EXPECT_EQ(delta_initial_guess(0.6, 0.3, 0.5, false), 0.0);
  EXPECT_THROW(delta_initial_guess(1.0, 0.5, 0.0), InvalidArgument);
}

TEST(ContractionRate, GeometricInput) {
  PicardReport rep;
  rep.noise_floor = 1e-9;
  for (int k = 0; k < 6; ++k) rep.distances.push_back(std::pow(0.3, k));
  const auto r = contraction_rate(rep);
  EXPECT_NEAR(r.ratio, 0.3, 1e-12);
  EXPECT_NEAR(r.ci_low, 0.3, 1e-9);
  EXPECT_NEAR(r.ci_high, 0.3, 1e-9);
  EXPECT_EQ(r.iterations_used, 6u);
}

TEST(ContractionRate, BelowNoiseFloorIsAnError) {
  PicardReport rep;
  rep.noise_floor = 1.0;
  rep.distances = {0.5, 0.2, 0.1, 0.05};
  try {
    contraction_rate(rep);
    FAIL() << "expected InsufficientData";
  } catch (const InsufficientData& e) {
    EXPECT_NE(std::string(e.what()).find("too few informative iterations"), std::string::npos);
  }
}

TEST(Picard, MeasureIndependentConvergesAfterOneMap) {
  const auto model = stable_ou_model(1);
  const auto res = picard_iterate(model, kSpec, InitialLaw::dirac({1.0}), small_config(4.0), RngStream(1));
  ASSERT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 2u);
  EXPECT_LE(res.report.distances[1], res.report.noise_floor);
  EXPECT_LE(res.report.residual, res.report.noise_floor);
  EXPECT_GT(res.report.noise_floor, 0.0);
}

TEST(Picard, LipschitzModelContracts) {
  const auto model = mean_field_eta_model(1, 0.6);
  const auto res = picard_iterate(model, kSpec, InitialLaw::dirac({1.0}), small_config(8.0), RngStream(2));
  const auto& rep = res.report;
  ASSERT_TRUE(rep.converged);
  ASSERT_GE(rep.distances.size(), 3u);
  EXPECT_LT(rep.fitted_ratio, 1.0);
  EXPECT_GE(rep.fitted_ratio, 0.0);
  for (std::size_t k = 0; k + 1 < rep.distances.size(); ++k) {
    EXPECT_GE(rep.distances[k], 0.0);
    if (rep.distances[k] >= 5.0 * rep.noise_floor) EXPECT_LE(rep.distances[k + 1], 0.9 * rep.distances[k]);
    // with common random numbers the decrease continues below the noise floor
    EXPECT_LE(rep.distances[k + 1], 0.9 * rep.distances[k]) << k;
  }
  EXPECT_LE(rep.residual, rep.distances.back() + 3.0 * rep.noise_floor);
  EXPECT_NEAR(rep.theoretical_factor_form, theoretical_factor(0.9, 0.6, 8.0), 1e-15);
  EXPECT_GT(rep.unweighted_sup, 0.0);
}

TEST(Picard, StartingFlowsReachTheSameFixedPoint) {
  const auto model = mean_field_eta_model(1, 0.6);
  auto cfg = small_config(8.0);
  const auto a = picard_iterate(model, kSpec, InitialLaw::dirac({1.0}), cfg, RngStream(3));
  cfg.start = PicardStart::PureNoise;
  const auto b = picard_iterate(model, kSpec, InitialLaw::dirac({1.0}), cfg, RngStream(3));
  const double gap = flow_distance(a.flow, b.flow, cfg.eta, cfg.delta, cfg.distance, RngStream(4));
  EXPECT_LE(gap, 3.0 * a.report.noise_floor);
}

TEST(Picard, ResidualDetectsShiftedFlow) {
  const auto model = mean_field_eta_model(1, 0.6);
  // exact distances: no subsampling noise in the floor
  auto cfg = small_config(8.0);
  cfg.particles = 1000;
  cfg.grid = TimeGrid::uniform(1.0, 10);
  const auto init = InitialLaw::dirac({1.0});
  const auto res = picard_iterate(model, kSpec, init, cfg, RngStream(5));
  const double at_fixed_point =
      residual_check(model, kSpec, res.flow, init, cfg.particles, RngStream(5), cfg.eta, cfg.delta, cfg.distance);
  EXPECT_LE(at_fixed_point, cfg.tol + 3.0 * res.report.noise_floor);
  const double shifted = residual_check(model, kSpec, res.flow.translated(1.0), init,
                                        cfg.particles, RngStream(5), cfg.eta, cfg.delta, cfg.distance);
  EXPECT_GE(shifted, 10.0 * res.report.noise_floor);
}

TEST(Picard, FittedRatioDecreasesWithDelta) {
  const auto model = mean_field_eta_model(1, 0.6);
  double previous = INFINITY;
  for (double delta : {2.0, 4.0, 8.0, 16.0}) {
    auto cfg = small_config(delta);
    cfg.tol = 1e-5;
    const auto res = picard_iterate(model, kSpec, InitialLaw::dirac({1.0}), cfg, RngStream(6));
    EXPECT_LE(res.report.fitted_ratio, previous) << delta;
    previous = res.report.fitted_ratio;
  }
}

TEST(Picard, ChooseDeltaMeetsTarget) {
  const auto model = mean_field_eta_model(1, 0.6);
  const auto choice = choose_delta(model, kSpec, InitialLaw::dirac({1.0}), small_config(0.0), 0.5, RngStream(7));
  EXPECT_TRUE(choice.satisfied);
  EXPECT_GE(choice.delta, choice.initial_guess);
  EXPECT_LE(choice.measured_ratio, 0.5);
  EXPECT_NEAR(choice.initial_guess, delta_initial_guess(0.9, 0.6, 0.5), 1e-12);
}

// W_eta at T between the Picard fixed point and the interacting particle
// system shrinks as the particle count grows.
TEST(Picard, ParticleSystemApproachesFixedPoint) {
  const auto model = mean_field_eta_model(1, 0.6);
  auto cfg = small_config(8.0);
  cfg.particles = 10000;
  cfg.grid = TimeGrid::uniform(1.0, 20);
  const auto init = InitialLaw::dirac({1.0});
  const auto fixed = picard_iterate(model, kSpec, init, cfg, RngStream(8));
  const EmpiricalMeasure& target = fixed.flow[20];
  std::vector<double> w;
  for (std::size_t N : {100, 1000, 10000}) {
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto mk = euler_mckean_particles(model, kSpec, init, cfg.grid, N, RngStream(100 + s));
      acc += wasserstein_estimate(mk.flow[20], target, cfg.eta, cfg.distance, RngStream(200 + s)).value / 3.0;
    }
    w.push_back(acc);
  }
  EXPECT_GT(w[0], w[1]);
  EXPECT_GT(w[1], w[2]);
}
