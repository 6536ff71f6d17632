#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stablemv/models.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

using namespace stablemv;

namespace {

std::vector<double> first_coordinate(const EmpiricalMeasure& m) { return m.points().coordinate(0); }

}  // namespace

TEST(Euler, ConstantCoefficientsAreExact) {
  for (double alpha : {0.7, 1.0, 1.5}) {
    const StableSpec spec{alpha, 1, Convention::GeneratorHalf};
    CoefficientSet c;
    c.drift = [](double, std::span<const double>, const MeasureArg&, std::span<double> out) { out[0] = 0.3; };
    c.constant_diffusion = {2.0};
    const auto grid = TimeGrid::uniform(1.0, 1);
    const auto flow = MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>{0.0}));
    const auto paths = euler_frozen_flow(c, spec, flow, InitialLaw::dirac({1.0}), grid, 20000, RngStream(1));
    const auto direct = sample_sym_stable(spec, 1.0, 20000, RngStream(2));
    std::vector<double> expected(20000);
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = 1.0 + 0.3 + 2.0 * direct[i][0];
    EXPECT_TRUE(ks_two_sample(first_coordinate(paths.marginal(1)), expected).passes(0.01)) << alpha;
  }
}

TEST(Euler, ManyStepsOfPureNoiseMatchOneIncrement) {
  const StableSpec spec{0.8, 1, Convention::Unit};
  const auto model = pure_stable_model(1);
  const auto grid = TimeGrid::uniform(2.0, 40);
  const auto r = euler_mckean_particles(model, spec, InitialLaw::dirac({0.0}), grid, 100000, RngStream(3));
  const auto direct = sample_sym_stable(spec, 2.0, 100000, RngStream(4));
  EXPECT_TRUE(ks_two_sample(first_coordinate(r.flow[40]), direct.coordinate(0)).passes(0.01));
}

TEST(Euler, OrnsteinUhlenbeckMedian) {
  const StableSpec spec{1.0, 1, Convention::GeneratorHalf};
  const auto grid = TimeGrid::uniform(1.0, 200);
  const auto flow = MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>{0.0}));
  const auto paths = euler_frozen_flow(stable_ou_model(1), spec, flow, InitialLaw::dirac({2.0}), grid, 20000,
                                       RngStream(5));
  const auto x = first_coordinate(paths.marginal(200));
  const double se = bootstrap_se(x, [](std::span<const double> s) { return median({s.begin(), s.end()}); }, 200,
                                 RngStream(6));
  EXPECT_NEAR(median(x), 2.0 * std::exp(-1.0), 3.0 * se);
}

TEST(Euler, GridErrors) {
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.3}), InvalidArgument);
  const StableSpec spec{1.0, 1, Convention::Unit};
  const auto coarse = TimeGrid::uniform(1.0, 4);
  const auto fine = TimeGrid::uniform(1.0, 8);
  const auto flow = MeasureFlow::constant(coarse, EmpiricalMeasure::dirac(std::vector<double>{0.0}));
  EXPECT_THROW(euler_frozen_flow(pure_stable_model(1), spec, flow, InitialLaw::dirac({0.0}), fine, 10, RngStream(1)),
               InvalidArgument);
  EXPECT_THROW(euler_frozen_flow(pure_stable_model(1), spec, flow, InitialLaw::dirac({0.0}), coarse, 0, RngStream(1)),
               InvalidArgument);
  EXPECT_THROW(
      euler_mckean_particles(mean_field_eta_model(1, 0.5), spec, InitialLaw::dirac({0.0}), coarse, 1, RngStream(1)),
      InvalidArgument);
}

TEST(Euler, NonFiniteCoefficientIsReported) {
  CoefficientSet c;
  c.drift = [](double t, std::span<const double>, const MeasureArg&, std::span<double> out) {
    out[0] = t > 0.4 ? NAN : 0.0;
  };
  c.constant_diffusion = {1.0};
  const auto grid = TimeGrid::uniform(1.0, 4);
  EXPECT_THROW(euler_mckean_particles(c, StableSpec{1.0, 1, Convention::Unit}, InitialLaw::dirac({0.0}), grid, 3,
                                      RngStream(1)),
               NumericalError);
}

TEST(Euler, ConventionRequirementIsEnforced) {
  const auto c = counterexample_model(0.75, 0.05);
  const auto grid = TimeGrid::uniform(1.0, 4);
  EXPECT_THROW(euler_mckean_particles(c, StableSpec{0.75, 1, Convention::GeneratorHalf}, InitialLaw::dirac({0.0}),
                                      grid, 10, RngStream(1)),
               InvalidArgument);
  EXPECT_NO_THROW(
      euler_mckean_particles(c, StableSpec{0.75, 1, Convention::Unit}, InitialLaw::dirac({0.0}), grid, 10, RngStream(1)));
}

TEST(Euler, Reproducible) {
  const StableSpec spec{0.9, 2, Convention::GeneratorHalf};
  const auto grid = TimeGrid::uniform(1.0, 20);
  const auto m = mean_field_eta_model(2, 0.6);
  const auto a = euler_mckean_particles(m, spec, InitialLaw::dirac({0.5, -0.5}), grid, 300, RngStream(7));
  const auto b = euler_mckean_particles(m, spec, InitialLaw::dirac({0.5, -0.5}), grid, 300, RngStream(7));
  for (std::size_t k = 0; k <= 20; ++k) EXPECT_TRUE(a.flow[k] == b.flow[k]);
  const auto c = euler_mckean_particles(m, spec, InitialLaw::dirac({0.5, -0.5}), grid, 300, RngStream(8));
  EXPECT_FALSE(a.flow[20] == c.flow[20]);
}

TEST(Euler, ParticleNoiseDoesNotDependOnN) {
  const StableSpec spec{1.2, 1, Convention::Unit};
  const auto grid = TimeGrid::uniform(1.0, 10);
  const auto flow = MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>{0.0}));
  const auto small = euler_frozen_flow(stable_ou_model(1), spec, flow, InitialLaw::dirac({0.0}), grid, 5, RngStream(9));
  const auto large = euler_frozen_flow(stable_ou_model(1), spec, flow, InitialLaw::dirac({0.0}), grid, 50, RngStream(9));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(small.at(i, 10)[0], large.at(i, 10)[0]);
}

TEST(Euler, FrozenFlowIgnoresParticles) {
  const StableSpec spec{1.0, 1, Convention::Unit};
  const auto grid = TimeGrid::uniform(1.0, 5);
  std::vector<EmpiricalMeasure> ms;
  for (std::size_t k = 0; k <= 5; ++k) ms.push_back(EmpiricalMeasure::dirac(std::vector<double>{double(k)}));
  const MeasureFlow flow(grid, ms);

  auto run = [&](double x0) {
    std::vector<double> seen;
    CoefficientSet c;
    c.measure_dependent_drift = true;
    c.drift = [&seen](double, std::span<const double>, const MeasureArg& m, std::span<double> out) {
      seen.push_back(m.measure.point(0)[0]);
      out[0] = 0.0;
    };
    c.constant_diffusion = {1.0};
    euler_frozen_flow(c, spec, flow, InitialLaw::dirac({x0}), grid, 3, RngStream(1));
    return seen;
  };
  const auto a = run(0.0), b = run(1e6);
  ASSERT_EQ(a.size(), 15u);
  EXPECT_EQ(a, b);
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[k * 3 + i], double(k));
}

TEST(Euler, MeasureIndependentMcKeanMatchesFrozen) {
  const StableSpec spec{1.3, 1, Convention::GeneratorHalf};
  const auto grid = TimeGrid::uniform(1.0, 20);
  const auto flow = MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>{3.0}));
  const auto frozen = euler_frozen_flow(stable_ou_model(1), spec, flow, InitialLaw::dirac({1.0}), grid, 10000,
                                        RngStream(10));
  const auto mk = euler_mckean_particles(stable_ou_model(1), spec, InitialLaw::dirac({1.0}), grid, 10000, RngStream(11));
  EXPECT_TRUE(ks_two_sample(first_coordinate(frozen.marginal(20)), first_coordinate(mk.flow[20])).passes(0.01));
}

TEST(Euler, InitialLawFromSampler) {
  const auto law = InitialLaw::from_sampler(1, [](RandomSource& s, std::span<double> out) { out[0] = s.normal(); });
  const auto p = law.draw(5000, RngStream(12));
  EXPECT_NEAR(mean_with_se(p.coordinate(0)).mean, 0.0, 0.06);
  const auto gamma = EmpiricalMeasure(Points(1, std::vector<double>{1.0, 2.0, 3.0}));
  const auto q = InitialLaw::from_measure(gamma).draw(3, RngStream(1));
  EXPECT_EQ(q.coordinate(0), (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(NoiseTape, CoarseningSumsIncrements) {
  const StableSpec spec{0.9, 1, Convention::Unit};
  const auto tape = NoiseTape::generate(spec, TimeGrid::uniform(1.0, 8), 4, RngStream(13));
  const auto c = tape.coarsen(4);
  EXPECT_EQ(c.grid(), TimeGrid::uniform(1.0, 2));
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (std::size_t k = 4; k < 8; ++k) s += tape.increment(i, k)[0];
    EXPECT_NEAR(c.increment(i, 1)[0], s, 1e-12);
  }
  EXPECT_THROW(tape.coarsen(3), InvalidArgument);
}

TEST(NoiseTape, TapeRunEqualsInternalNoise) {
  const StableSpec spec{0.9, 1, Convention::Unit};
  const auto grid = TimeGrid::uniform(1.0, 10);
  const auto tape = NoiseTape::generate(spec, grid, 20, RngStream(14));
  const auto m = mean_field_eta_model(1, 0.6);
  const auto a = euler_mckean_particles(m, spec, InitialLaw::dirac({0.0}), grid, 20, RngStream(14), &tape);
  const auto b = euler_mckean_particles(m, spec, InitialLaw::dirac({0.0}), grid, 20, RngStream(14));
  EXPECT_TRUE(a.flow[10] == b.flow[10]);
}

// Coupled through one noise tape, the M-step and 2M-step marginals at T move
// closer as M grows.
TEST(Euler, StepRefinementTrend) {
  const StableSpec spec{0.9, 1, Convention::GeneratorHalf};
  const auto model = mean_field_eta_model(1, 0.6);
  const std::vector<std::size_t> Ms{25, 50, 100};
  std::vector<double> avg(Ms.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (std::size_t j = 0; j < Ms.size(); ++j) {
      const auto fine_grid = TimeGrid::uniform(1.0, 2 * Ms[j]);
      const auto tape = NoiseTape::generate(spec, fine_grid, 400, RngStream(seed));
      const auto coarse_tape = tape.coarsen(2);
      const auto fine =
          euler_mckean_particles(model, spec, InitialLaw::dirac({1.0}), fine_grid, 400, RngStream(seed), &tape);
      const auto coarse = euler_mckean_particles(model, spec, InitialLaw::dirac({1.0}), coarse_tape.grid(), 400,
                                                 RngStream(seed), &coarse_tape);
      avg[j] += wasserstein_kappa(fine.flow[2 * Ms[j]], coarse.flow[Ms[j]], 0.6) / 3.0;
    }
  }
  for (std::size_t j = 1; j < Ms.size(); ++j) EXPECT_LT(avg[j], avg[j - 1]) << Ms[j];
}

TEST(SupMoment, ConstantPathIsExact) {
  PathBundle b(TimeGrid::uniform(1.0, 3), 4, 2, 1.0, 0, 0);
  for (std::size_t k = 0; k <= 3; ++k)
    for (std::size_t i = 0; i < 4; ++i) {
      b.at(i, k)[0] = 3.0;
      b.at(i, k)[1] = -4.0;
    }
  const auto m = sup_moment(b, 0.5);
  EXPECT_DOUBLE_EQ(m.mean, std::sqrt(5.0));
  EXPECT_NEAR(m.std_error, 0.0, 1e-12);
  EXPECT_THROW(sup_moment(b, 1.0), InvalidArgument);
  EXPECT_THROW(sup_moment(PathBundle(), 0.5), InvalidArgument);
}

TEST(SupMoment, StableInN) {
  const StableSpec spec{1.0, 1, Convention::GeneratorHalf};
  const auto grid = TimeGrid::uniform(1.0, 50);
  const auto model = pure_stable_model(1);
  const auto small = euler_mckean_particles(model, spec, InitialLaw::dirac({0.0}), grid, 10000, RngStream(15));
  const auto large = euler_mckean_particles(model, spec, InitialLaw::dirac({0.0}), grid, 100000, RngStream(16));
  const double a = sup_moment(small.paths, 0.5).mean, b = sup_moment(large.paths, 0.5).mean;
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_LT(std::abs(a - b) / b, 0.05);
}

TEST(Validation, CatalogModelsPass) {
  ValidationOptions opts;
  opts.alpha = 1.5;
  opts.tuples = 200;
  EXPECT_TRUE(validate_coefficients(mean_field_eta_model(2, 0.6), opts).ok());
  EXPECT_TRUE(validate_coefficients(stable_ou_model(1), opts).ok());
}

TEST(Validation, ViolationsAreWarnings) {
  ValidationOptions opts;
  opts.alpha = 1.5;
  opts.tuples = 200;
  auto weak = pure_stable_model(1);
  weak.constant_diffusion = {0.1};
  const auto r1 = validate_coefficients(weak, opts);
  EXPECT_FALSE(r1.ok());
  EXPECT_NEAR(r1.min_eigenvalue, 0.01, 1e-15);

  auto low_beta = stable_ou_model(1);
  low_beta.constants.beta = 0.2;
  EXPECT_FALSE(validate_coefficients(low_beta, opts).ok());

  auto measure_sigma = pure_stable_model(1);
  measure_sigma.constant_diffusion.clear();
  measure_sigma.measure_dependent_diffusion = true;
  measure_sigma.diffusion = [](double, std::span<const double>, const MeasureArg& m, std::span<double> out) {
    out[0] = 1.0 + 0.5 * std::tanh(10.0 * m.measure.moment(1.0));
  };
  const auto r3 = validate_coefficients(measure_sigma, opts);
  EXPECT_GT(r3.max_sigma_lipschitz, 0.0);
}
