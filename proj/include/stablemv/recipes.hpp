#pragma once

// Named acceptance recipes. Each writes its evidence into a run directory
// and returns PASS/FAIL with a one-line summary. Tolerances live here.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "stablemv/counterexample.hpp"
#include "stablemv/experiments.hpp"
#include "stablemv/io.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/models.hpp"
#include "stablemv/picard.hpp"
#include "stablemv/regularity_probe.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"
#include "stablemv/transport.hpp"

namespace stablemv {

struct RecipeResult {
  bool passed = false;
  std::string detail;
  Json report;
};

struct RecipeOutcome {
  std::string name;
  std::string description;
  bool passed = false;
  std::string detail;
  std::filesystem::path run_path;
};

namespace recipes {

inline std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

inline constexpr std::size_t kCharfnSamples = 1'000'000;

inline RecipeResult c1_charfn(RunDirectory& out, const RngStream& rng) {
  const std::size_t n = kCharfnSamples;
  const double bound = 5.0 / std::sqrt(static_cast<double>(n));
  const std::array<std::pair<double, Convention>, 4> cases{
      {{0.6, Convention::GeneratorHalf}, {1.0, Convention::GeneratorHalf}, {1.0, Convention::Unit},
       {1.5, Convention::GeneratorHalf}}};
  CsvWriter csv({"alpha", "convention", "dim", "xi_norm", "error", "bound"});
  double worst = 0.0;
  std::uint64_t stream = 0;
  for (const auto& [alpha, conv] : cases)
    for (std::size_t d : {std::size_t{1}, std::size_t{3}}) {
      const auto x = sample_sym_stable(StableSpec{alpha, d, conv}, 1.0, n, rng.substream(stream++));
      // direction (1, ..., 1) / sqrt(d)
      const double u = 1.0 / std::sqrt(static_cast<double>(d));
      for (int j = -8; j <= 8; ++j) {
        const double s = 0.5 * j;
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double dot = 0.0;
          for (std::size_t k = 0; k < d; ++k) dot += x[i][k];
          re += std::cos(s * u * dot);
          im += std::sin(s * u * dot);
        }
        const double target = std::exp(-charfn_rate(conv, 1.0) * std::pow(std::abs(s), alpha));
        const double err = std::abs(std::complex<double>(re / n - target, im / n));
        worst = std::max(worst, err);
        csv.row({format_double(alpha), to_string(conv), std::to_string(d), format_double(s), format_double(err),
                 format_double(bound)});
      }
    }
  out.write_csv("charfn.csv", csv);
  RecipeResult r;
  r.passed = worst <= bound;
  r.detail = "max |phi_hat - target| = " + fmt(worst) + " (bound " + fmt(bound) + ", 8 cases x 17 points)";
  r.report = {{"max_error", worst}, {"bound", bound}, {"samples", n}};
  return r;
}

inline RecipeResult c2_cauchy_moment(RunDirectory& out, const RngStream& rng) {
  const std::size_t n = 1'000'000;
  const auto x = sample_sym_stable(StableSpec{1.0, 1, Convention::Unit}, 1.0, n, rng);
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = std::sqrt(std::abs(x[i][0]));
  const auto est = mean_with_se(m);
  // E|C|^{1/2} = 1 / sin(3 pi / 4) for a standard Cauchy C
  const double oracle = 1.0 / std::sin(0.75 * std::numbers::pi);
  const double z = (est.mean - oracle) / est.std_error;
  RecipeResult r;
  r.passed = std::abs(z) <= 3.0;
  r.detail = "E|L_1|^0.5 = " + fmt(est.mean, 6) + " vs sqrt 2, z = " + fmt(z, 3);
  r.report = {{"estimate", est.mean}, {"std_error", est.std_error}, {"oracle", oracle}, {"z", z}};
  out.write_json("moment.json", r.report);
  return r;
}

inline RecipeResult c3_subordination(RunDirectory& out, const RngStream& rng) {
  const std::size_t n = 20000;
  bool ok = true;
  Json ks = Json::array();
  double min_p = 1.0;
  std::uint64_t stream = 0;
  for (double alpha : {0.6, 1.0, 1.5}) {
    const StableSpec spec{alpha, 1, Convention::GeneratorHalf};
    const auto a = sample_subordinated(spec, 1.0, n, rng.substream(stream++));
    const auto b = sample_sym_stable(spec, 1.0, n, rng.substream(stream++));
    const auto res = ks_two_sample(a.coordinate(0), b.coordinate(0));
    ok = ok && res.passes(0.01);
    min_p = std::min(min_p, res.p_value);
    ks.push_back({{"alpha", alpha}, {"statistic", res.statistic}, {"p_value", res.p_value}, {"passes", res.passes(0.01)}});
  }
  const std::size_t m = 1'000'000;
  const auto s = sample_subordinator(1.0, 1.0, m, rng.substream(stream++));
  std::vector<double> e(m);
  for (std::size_t i = 0; i < m; ++i) e[i] = std::exp(-s[i]);
  const auto est = mean_with_se(e);
  const double oracle = std::exp(-std::sqrt(2.0) / 2.0);
  const double z = (est.mean - oracle) / est.std_error;
  RecipeResult r;
  r.passed = ok && std::abs(z) <= 3.0;
  r.detail = "KS min p = " + fmt(min_p, 3) + ", Laplace z = " + fmt(z, 3);
  r.report = {{"ks", ks}, {"laplace", {{"estimate", est.mean}, {"std_error", est.std_error}, {"oracle", oracle}, {"z", z}}}};
  out.write_json("subordination.json", r.report);
  return r;
}

inline double permutation_brute_force(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa) {
  std::vector<std::size_t> perm(mu.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += std::pow(distance(mu.point(i), nu.point(perm[i])), kappa);
    best = std::min(best, s / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline RecipeResult c4_wasserstein_exact(RunDirectory& out, const RngStream& rng) {
  RandomSource src = rng.source();
  CsvWriter csv({"instance", "n", "dim", "kappa", "lp", "brute_force", "solver", "dual_lower_bound"});
  double worst_gap = 0.0, worst_duality = -INFINITY;
  for (std::size_t k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k % 6;
    const std::size_t d = 1 + (k / 6) % 2;
    const double kappa = std::array{0.3, 0.7, 1.0}[k % 3];
    Points a(n, d), b(n, d);
    for (double& v : a.flat()) v = src.normal();
    for (double& v : b.flat()) v = 0.5 + src.normal();
    const EmpiricalMeasure mu(std::move(a)), nu(std::move(b));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const double lp = solve_transport(w, w, detail::kappa_costs(mu, nu, kappa, idx, idx)).cost;
    const double brute = permutation_brute_force(mu, nu, kappa);
    const double solver = wasserstein_kappa(mu, nu, kappa);
    const double lb = holder_dual_lb(mu, nu, kappa);
    worst_gap = std::max({worst_gap, std::abs(lp - brute), std::abs(solver - brute)});
    worst_duality = std::max(worst_duality, lb - lp);
    csv.row({std::to_string(k), std::to_string(n), std::to_string(d), format_double(kappa), format_double(lp),
             format_double(brute), format_double(solver), format_double(lb)});
  }
  out.write_csv("instances.csv", csv);
  RecipeResult r;
  r.passed = worst_gap <= 1e-9 && worst_duality <= 1e-12;
  r.detail = "max |LP - brute force| = " + fmt(worst_gap, 3) + " over 200 instances, max(dual - primal) = " +
             fmt(worst_duality, 3);
  r.report = {{"max_abs_gap", worst_gap}, {"max_dual_minus_primal", worst_duality}};
  return r;
}

inline RecipeResult c5_euler(RunDirectory& out, const RngStream& rng) {
  // one step with constant coefficients is exact
  const std::size_t n = 20000;
  bool ks_ok = true;
  double min_p = 1.0;
  Json ks = Json::array();
  std::uint64_t stream = 0;
  for (double alpha : {0.7, 1.0, 1.5}) {
    const StableSpec spec{alpha, 1, Convention::GeneratorHalf};
    CoefficientSet c;
    c.drift = [](double, std::span<const double>, const MeasureArg&, std::span<double> o) { o[0] = 0.3; };
    c.constant_diffusion = {2.0};
    const auto grid = TimeGrid::uniform(1.0, 1);
    const auto flow = MeasureFlow::constant(grid, EmpiricalMeasure::dirac(std::vector<double>{0.0}));
    const auto paths = euler_frozen_flow(c, spec, flow, InitialLaw::dirac({1.0}), grid, n, rng.substream(stream++));
    const auto direct = sample_sym_stable(spec, 1.0, n, rng.substream(stream++));
    std::vector<double> expected(n);
    for (std::size_t i = 0; i < n; ++i) expected[i] = 1.3 + 2.0 * direct[i][0];
    const auto res = ks_two_sample(paths.marginal(1).points().coordinate(0), expected);
    ks_ok = ks_ok && res.passes(0.01);
    min_p = std::min(min_p, res.p_value);
    ks.push_back({{"alpha", alpha}, {"statistic", res.statistic}, {"p_value", res.p_value}});
  }

  // refinement on the Lipschitz test model, M vs 2M with shared noise
  const StableSpec spec{0.9, 1, Convention::GeneratorHalf};
  const auto model = mean_field_eta_model(1, 0.6);
  const std::vector<std::size_t> Ms{50, 100, 200, 400};
  const std::size_t particles = 1000, seeds = 5;
  std::vector<double> avg(Ms.size(), 0.0);
  CsvWriter csv({"seed", "M", "w_eta"});
  for (std::size_t s = 0; s < seeds; ++s) {
    const RngStream srng = rng.substream(100 + s);
    for (std::size_t j = 0; j < Ms.size(); ++j) {
      const auto fine_grid = TimeGrid::uniform(1.0, 2 * Ms[j]);
      const auto tape = NoiseTape::generate(spec, fine_grid, particles, srng);
      const auto coarse_tape = tape.coarsen(2);
      const auto init = InitialLaw::dirac({1.0});
      const auto fine = euler_mckean_particles(model, spec, init, fine_grid, particles, srng, &tape);
      const auto coarse =
          euler_mckean_particles(model, spec, init, coarse_tape.grid(), particles, srng, &coarse_tape);
      const double w = wasserstein_kappa(fine.flow[2 * Ms[j]], coarse.flow[Ms[j]], 0.6);
      avg[j] += w / static_cast<double>(seeds);
      csv.row({double(s), double(Ms[j]), w});
    }
  }
  out.write_csv("refinement.csv", csv);
  bool monotone = true;
  for (std::size_t j = 1; j < Ms.size(); ++j) monotone = monotone && avg[j] < avg[j - 1];
  RecipeResult r;
  r.passed = ks_ok && monotone;
  std::string seq;
  for (double a : avg) seq += (seq.empty() ? "" : " > ") + fmt(a, 3);
  r.detail = "one-step KS min p = " + fmt(min_p, 3) + "; mean W_0.6(M, 2M) over M=50..400: " + seq;
  r.report = {{"ks", ks}, {"M", Ms}, {"mean_w_eta", avg}, {"monotone", monotone}};
  out.write_json("euler.json", r.report);
  return r;
}

inline RecipeResult c6_picard(RunDirectory& out, const RngStream& rng) {
  const StableSpec spec{0.9, 1, Convention::GeneratorHalf};
  const auto model = mean_field_eta_model(1, 0.6);
  const auto init = InitialLaw::dirac({1.0});
  PicardConfig pc;
  pc.eta = 0.6;
  pc.tol = 1e-3;
  pc.max_iter = 20;
  pc.particles = 10000;
  pc.grid = TimeGrid::uniform(1.0, 100);
  const auto choice = choose_delta(model, spec, init, pc, 0.5, rng.substream(1));
  pc.delta = choice.delta;
  const auto a = picard_iterate(model, spec, init, pc, rng.substream(2));
  pc.start = PicardStart::PureNoise;
  const auto b = picard_iterate(model, spec, init, pc, rng.substream(2));
  const auto& rep = a.report;
  const double floor = rep.noise_floor;

  std::size_t informative = 0;
  double worst_informative = 0.0, worst_any = 0.0;
  for (std::size_t k = 0; k + 1 < rep.distances.size(); ++k) {
    if (rep.distances[k] <= 0.0) continue;
    const double ratio = rep.distances[k + 1] / rep.distances[k];
    worst_any = std::max(worst_any, ratio);
    if (rep.distances[k] >= 5.0 * floor) {
      ++informative;
      worst_informative = std::max(worst_informative, ratio);
    }
  }
  const double gap = flow_distance(a.flow, b.flow, pc.eta, pc.delta, pc.distance, rng.substream(3));
  const bool ratio_ok = worst_informative <= 0.8 && worst_any <= 0.8;
  const bool residual_ok = rep.residual <= pc.tol + 3.0 * floor;
  const bool agree = gap <= 3.0 * floor;

  Json report = to_json(rep);
  report["delta_choice"] = {{"initial_guess", choice.initial_guess}, {"delta", choice.delta},
                            {"measured_ratio", choice.measured_ratio}, {"satisfied", choice.satisfied}};
  report["informative_iterations"] = informative;
  report["worst_informative_ratio"] = worst_informative;
  report["worst_successive_ratio"] = worst_any;
  report["pure_noise_start"] = to_json(b.report);
  report["start_gap"] = gap;
  out.write_json("picard.json", report);

  RecipeResult r;
  r.passed = ratio_ok && residual_ok && agree && rep.converged;
  r.detail = "delta = " + fmt(pc.delta, 4) + ", worst ratio " + fmt(worst_any, 3) + " (" +
             std::to_string(informative) + " informative), residual " + fmt(rep.residual, 3) + " <= " +
             fmt(pc.tol + 3.0 * floor, 3) + ", start gap " + fmt(gap, 3) + " <= " + fmt(3.0 * floor, 3);
  r.report = {{"ratio_ok", ratio_ok}, {"residual_ok", residual_ok}, {"starts_agree", agree}};
  return r;
}

inline RecipeResult probe_recipe(RunDirectory& out, const RngStream& rng, bool fractional) {
  const StableSpec spec{1.0, 1, Convention::GeneratorHalf};
  ProbeOptions o;
  o.steps = 1;
  std::size_t N = 100000;
  std::vector<double> lags = log_spaced(0.05, 2.0, 8);
  double tol = 0.15;
  if (fractional) {
    N = 20000;
    lags = log_spaced(0.05, 2.0, 6);
    o.half_points = 200;
    o.grid_factor = 0.1;
    tol = 0.2;
  }
  const auto res = fractional
                       ? frac_deriv_decay_probe(pure_stable_model(1), spec, nullptr, abs_power_function(0.5), lags, N, rng, o)
                       : grad_decay_probe(pure_stable_model(1), spec, nullptr, abs_power_function(0.5), lags, N, rng, o);
  CsvWriter csv({"lag", "estimate", "stderr"});
  for (std::size_t j = 0; j < res.lags.size(); ++j) csv.row({res.lags[j], res.estimates[j], res.std_errors[j]});
  out.write_csv("probe.csv", csv);
  out.write_json("probe.json", to_json(res));
  double worst_cutoff = 0.0;
  for (double c : res.cutoff_change) worst_cutoff = std::max(worst_cutoff, c);
  RecipeResult r;
  r.passed = !res.inconclusive && std::abs(res.fitted_slope - res.target_exponent) <= tol &&
             (!fractional || worst_cutoff <= 0.2);
  r.detail = "slope " + fmt(res.fitted_slope) + " CI [" + fmt(res.slope_ci_low) + ", " + fmt(res.slope_ci_high) +
             "], target " + fmt(res.target_exponent) + " +- " + fmt(tol);
  if (fractional) r.detail += ", max cutoff change " + fmt(worst_cutoff, 3);
  r.report = {{"slope", res.fitted_slope}, {"tolerance", tol}};
  return r;
}

inline RecipeResult c7_gradient(RunDirectory& out, const RngStream& rng) { return probe_recipe(out, rng, false); }
inline RecipeResult c8_fractional(RunDirectory& out, const RngStream& rng) { return probe_recipe(out, rng, true); }

inline RecipeResult c9_counterexample(RunDirectory& out, const RngStream& rng) {
  const double alpha = 0.75;
  const double c_star = std::pow(alpha, 1.0 / alpha);
  const std::vector<double> rhos{0.2, 0.1, 0.05, 0.025};
  Json roots = Json::array();
  std::vector<double> cs;
  RootFindReport main_root;
  for (std::size_t j = 0; j < rhos.size(); ++j) {
    const auto root = solve_fixed_point(alpha, rhos[j], 1e-6, RootMethod::Quadrature, rng.substream(j));
    roots.push_back(to_json(root));
    cs.push_back(root.c);
    if (rhos[j] == 0.05) main_root = root;
  }
  out.write_json("roots.json", roots);
  bool monotone = true;
  for (std::size_t j = 0; j < cs.size(); ++j) {
    monotone = monotone && cs[j] < c_star;
    if (j > 0) monotone = monotone && cs[j] > cs[j - 1];
  }
  const bool root_ok = main_root.converged && main_root.rho == 0.05 && std::abs(main_root.residual) < 1e-3;

  const auto v = verify_two_solutions(main_root, TimeGrid::uniform(1.0, 100), 10000, rng.substream(10));
  out.write_json("verify.json", to_json(v));
  CsvWriter csv({"index", "symmetric", "shifted"});
  for (std::size_t i = 0; i < v.symmetric_law_T.size(); ++i)
    csv.row({double(i), v.symmetric_law_T[i], v.shifted_law_T[i]});
  out.write_csv("laws_t1.csv", csv);

  RecipeResult r;
  r.passed = root_ok && monotone && v.integrated_ok && v.symmetric_ok && v.separated && v.within_bound;
  std::string seq;
  for (double c : cs) seq += (seq.empty() ? "" : " < ") + fmt(c, 4);
  r.detail = "|g| = " + fmt(std::abs(main_root.residual), 2) + ", c(rho): " + seq + " -> " + fmt(c_star, 4) +
             "; integrated drift " + fmt(v.integrated_drift, 4) + " vs " + fmt(v.c, 4) + "; W_eta " +
             fmt(v.separation, 3) + " vs floor " + fmt(v.noise_floor, 3) + ", bound " + fmt(v.translation_bound, 3);
  r.report = {{"root_ok", root_ok}, {"monotone", monotone}, {"integrated_ok", v.integrated_ok},
              {"symmetric_ok", v.symmetric_ok}, {"separated", v.separated}, {"within_bound", v.within_bound}};
  return r;
}

inline RecipeResult c10_moment_form(RunDirectory& out, const RngStream& rng) {
  const StableSpec spec{1.0, 1, Convention::GeneratorHalf};
  const auto model = stable_ou_model(1);
  const auto grid = TimeGrid::uniform(1.0, 100);
  const double eta = 0.5;
  CsvWriter csv({"x0", "sup_moment", "std_error", "normalized"});
  double lo = INFINITY, hi = 0.0;
  for (double x : {0.0, 1.0, 2.0, 4.0}) {
    const auto res = euler_mckean_particles(model, spec, InitialLaw::dirac({x}), grid, 10000, rng);
    const auto m = sup_moment(res.paths, eta);
    const double normalized = m.mean / (1.0 + std::pow(std::abs(x), eta));
    lo = std::min(lo, normalized);
    hi = std::max(hi, normalized);
    csv.row({x, m.mean, m.std_error, normalized});
  }
  out.write_csv("moments.csv", csv);
  RecipeResult r;
  r.passed = hi / lo < 3.0;
  r.detail = "normalized sup-moment spread " + fmt(hi / lo, 3) + " (limit 3)";
  r.report = {{"spread", hi / lo}};
  return r;
}

struct Recipe {
  std::string name;
  std::string description;
  std::function<RecipeResult(RunDirectory&, const RngStream&)> run;
};

}  // namespace recipes

/// Recipes reran by the reproducibility criterion (one per module).
inline const std::vector<std::string>& reproducibility_recipes() {
  static const std::vector<std::string> names{"c1_charfn", "c4_wasserstein_exact", "c5_euler", "c7_gradient",
                                              "c9_counterexample"};
  return names;
}

RecipeOutcome run_recipe(const std::string& name, const std::filesystem::path& root, std::uint64_t seed);

namespace recipes {

/// Reruns each listed recipe into two fresh roots and compares the files.
inline RecipeResult reproducibility(const std::vector<std::string>& names, const std::filesystem::path& scratch,
                                    std::uint64_t seed, Json& report) {
  RecipeResult r;
  r.passed = true;
  std::size_t files = 0;
  for (const auto& n : names) {
    const auto a = run_recipe(n, scratch / "a", seed);
    const auto b = run_recipe(n, scratch / "b", seed);
    const auto diff = compare_run_outputs(a.run_path, b.run_path);
    for (const auto& e : std::filesystem::recursive_directory_iterator(a.run_path)) files += e.is_regular_file();
    report.push_back({{"recipe", n}, {"differing_files", diff}});
    r.passed = r.passed && diff.empty();
    if (!diff.empty()) r.detail += n + " differs in " + diff.front() + "; ";
  }
  std::filesystem::remove_all(scratch);
  if (r.passed) r.detail = std::to_string(names.size()) + " recipes rerun, " + std::to_string(files) +
                           " files byte-identical (manifest.json excluded)";
  return r;
}

inline RecipeResult c11_reproducibility(RunDirectory& out, const RngStream& rng) {
  Json report = Json::array();
  auto r = reproducibility(reproducibility_recipes(), out.final_path().parent_path() / ".c11_scratch", rng.seed(),
                           report);
  out.write_json("comparison.json", report);
  return r;
}

inline const std::vector<Recipe>& all() {
  static const std::vector<Recipe> list{
      {"c1_charfn", "stable sampler characteristic function", c1_charfn},
      {"c2_cauchy_moment", "Cauchy fractional moment", c2_cauchy_moment},
      {"c3_subordination", "subordination identity", c3_subordination},
      {"c4_wasserstein_exact", "W_kappa exactness and weak duality", c4_wasserstein_exact},
      {"c5_euler", "Euler exactness and refinement", c5_euler},
      {"c6_picard", "Picard contraction", c6_picard},
      {"c7_gradient", "gradient decay exponent", c7_gradient},
      {"c8_fractional", "fractional-derivative decay exponent", c8_fractional},
      {"c9_counterexample", "counterexample end to end", c9_counterexample},
      {"c10_moment_form", "moment-bound form", c10_moment_form},
      {"c11_reproducibility", "byte-identical reruns", c11_reproducibility},
  };
  return list;
}

}  // namespace recipes

inline std::vector<std::string> recipe_names() {
  std::vector<std::string> out;
  for (const auto& r : recipes::all()) out.push_back(r.name);
  return out;
}

inline RecipeOutcome run_recipe(const std::string& name, const std::filesystem::path& root, std::uint64_t seed) {
  for (const auto& recipe : recipes::all()) {
    if (recipe.name != name) continue;
    Json config;
    config["schema_version"] = kConfigSchemaVersion;
    config["recipe"] = name;
    config["seed"] = seed;
    RunDirectory dir(root, config);
    const auto res = recipe.run(dir, RngStream(seed));
    Json summary;
    summary["recipe"] = name;
    summary["passed"] = res.passed;
    summary["detail"] = res.detail;
    summary["checks"] = res.report;
    dir.write_json("result.json", summary);
    RecipeOutcome out{name, recipe.description, res.passed, res.detail, {}};
    out.run_path = dir.commit();
    return out;
  }
  throw InvalidArgument("unknown recipe '" + name + "'");
}

}  // namespace stablemv
