#pragma once

// Subcommand configurations, their defaults, and runners that write the
// artifacts of one run. Shared by the command-line tool and the recipes.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stablemv/core.hpp"
#include "stablemv/counterexample.hpp"
#include "stablemv/io.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/models.hpp"
#include "stablemv/picard.hpp"
#include "stablemv/regularity_probe.hpp"
#include "stablemv/sde_engine.hpp"
#include "stablemv/stable_density.hpp"
#include "stablemv/stable_noise.hpp"

namespace stablemv {

// ---- reports -------------------------------------------------------------

inline Json to_json(const PicardReport& r) {
  Json j;
  j["distances"] = r.distances;
  j["distance_std_errors"] = r.distance_std_errors;
  j["delta"] = r.delta_used;
  j["fitted_ratio"] = r.fitted_ratio;
  j["ratio_from_informative"] = r.ratio_from_informative;
  j["theoretical_factor_form"] = r.theoretical_factor_form;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["residual"] = r.residual;
  j["noise_floor"] = r.noise_floor;
  j["unweighted_sup"] = r.unweighted_sup;
  j["eta"] = r.eta;
  return j;
}

inline Json to_json(const ProbeResult& r) {
  Json j;
  j["fitted_slope"] = r.fitted_slope;
  j["ci"] = {r.slope_ci_low, r.slope_ci_high};
  j["target"] = r.target_exponent;
  j["inconclusive"] = r.inconclusive;
  j["notes"] = r.notes;
  j["lags"] = r.lags;
  j["estimates"] = r.estimates;
  j["std_errors"] = r.std_errors;
  if (!r.coupled_variance.empty()) {
    j["coupled_variance"] = r.coupled_variance;
    j["uncoupled_variance"] = r.uncoupled_variance;
  }
  if (!r.cutoff_change.empty()) {
    j["coarse_cutoff_estimates"] = r.coarse_cutoff_estimates;
    j["cutoff_change"] = r.cutoff_change;
  }
  return j;
}

inline Json to_json(const RootFindReport& r) {
  Json j;
  j["alpha"] = r.alpha;
  j["rho"] = r.rho;
  j["rho_requested"] = r.rho_requested;
  j["c"] = r.c;
  j["residual"] = r.residual;
  j["residual_error"] = r.residual_error;
  j["tol"] = r.tol;
  j["method"] = to_string(r.method);
  j["bracket"] = {r.bracket_low, r.bracket_high};
  j["evaluations"] = r.evaluations;
  j["bisection_steps"] = r.bisection_steps;
  j["rho_halvings"] = r.rho_halvings;
  j["converged"] = r.converged;
  j["warnings"] = r.warnings;
  return j;
}

inline Json to_json(const NodeCheck& n) {
  return Json{{"t", n.t}, {"estimate", n.estimate}, {"std_error", n.std_error}, {"target", n.target},
              {"allowance", n.allowance}, {"ok", n.ok}};
}

inline Json to_json(const EulerResidual& e) {
  return Json{{"defect", e.defect}, {"reference", e.reference}, {"std_error", e.std_error},
              {"eta_moment", e.eta_moment}, {"consistent", e.consistent}};
}

inline Json to_json(const TwoSolutionReport& v) {
  Json j;
  j["alpha"] = v.alpha;
  j["c"] = v.c;
  j["rho"] = v.rho;
  j["eta"] = v.eta;
  j["T"] = v.T;
  j["particles"] = v.particles;
  Json drift = Json::array(), sym = Json::array();
  for (const auto& n : v.drift) drift.push_back(to_json(n));
  for (const auto& n : v.symmetric) sym.push_back(to_json(n));
  j["drift_check"] = {{"ok", v.drift_ok}, {"nodes", drift}, {"scaled_drift", v.scaled_drift}};
  j["integrated_drift"] = {{"estimate", v.integrated_drift}, {"target", v.c * std::pow(v.T, 1.0 / v.alpha)},
                           {"std_error", v.integrated_drift_se}, {"allowance", v.integrated_drift_allowance},
                           {"ok", v.integrated_ok}};
  j["symmetric_check"] = {{"ok", v.symmetric_ok}, {"nodes", sym}};
  j["euler_residuals"] = {{"symmetric", to_json(v.symmetric_residual)}, {"shifted", to_json(v.shifted_residual)}};
  j["separation"] = {{"w_eta", v.separation}, {"noise_floor", v.noise_floor},
                     {"translation_bound", v.translation_bound}, {"separated", v.separated},
                     {"within_bound", v.within_bound}};
  j["all_ok"] = v.all_ok();
  return j;
}

inline CsvWriter points_csv(const Points& p) {
  std::vector<std::string> header{"index"};
  for (std::size_t k = 0; k < p.dim(); ++k) header.push_back("x_" + std::to_string(k + 1));
  CsvWriter csv(header);
  std::vector<std::string> cells(p.dim() + 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    cells[0] = std::to_string(i);
    for (std::size_t k = 0; k < p.dim(); ++k) cells[k + 1] = format_double(p[i][k]);
    csv.row(cells);
  }
  return csv;
}

/// Point cloud from a CSV with a header row; a leading `index` column is
/// skipped.
inline EmpiricalMeasure read_points_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty CSV file " + path.string());
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  const auto header = split(line);
  const std::size_t skip = (!header.empty() && header[0] == "index") ? 1 : 0;
  const std::size_t dim = header.size() - skip;
  require(dim >= 1, "CSV " + path.string() + " has no coordinate columns");
  std::vector<double> flat;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), path.string() + ":" + std::to_string(row) + ": wrong number of columns");
    for (std::size_t k = skip; k < cells.size(); ++k) {
      double v = 0.0;
      const auto res = std::from_chars(cells[k].data(), cells[k].data() + cells[k].size(), v);
      require(res.ec == std::errc() && res.ptr == cells[k].data() + cells[k].size() && std::isfinite(v),
              path.string() + ":" + std::to_string(row) + ": not a finite number '" + cells[k] + "'");
      flat.push_back(v);
    }
  }
  require(!flat.empty(), "CSV " + path.string() + " has no rows");
  return EmpiricalMeasure(Points(dim, std::move(flat)));
}

// ---- field access with schema paths --------------------------------------

namespace field {

inline double number(const Json& c, const std::string& key) {
  if (!c.contains(key) || !c[key].is_number()) throw ConfigError(key, "expected a number");
  return c[key].get<double>();
}

inline std::uint64_t count(const Json& c, const std::string& key) {
  if (!c.contains(key) || !c[key].is_number_integer() || (!c[key].is_number_unsigned() && c[key].get<std::int64_t>() < 0))
    throw ConfigError(key, "expected a non-negative integer");
  return c[key].get<std::uint64_t>();
}

inline std::string text(const Json& c, const std::string& key) {
  if (!c.contains(key) || !c[key].is_string()) throw ConfigError(key, "expected a string");
  return c[key].get<std::string>();
}

inline std::vector<double> numbers(const Json& c, const std::string& key) {
  if (!c.contains(key) || !c[key].is_array()) throw ConfigError(key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : c[key]) {
    if (!v.is_number()) throw ConfigError(key, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

inline double alpha(const Json& c) {
  const double a = number(c, "alpha");
  check(a > 0.0 && a < 2.0, "alpha", "must lie in (0, 2)");
  return a;
}

inline Convention convention(const Json& c) {
  try {
    return convention_from_string(text(c, "convention"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("convention", e.what());
  }
}

inline std::size_t positive(const Json& c, const std::string& key) {
  const auto v = count(c, key);
  check(v >= 1, key, "must be >= 1");
  return static_cast<std::size_t>(v);
}

inline std::string model_name(const Json& c) {
  const std::string m = text(c, "model");
  const auto& names = model_names();
  if (std::find(names.begin(), names.end(), m) == names.end())
    throw ConfigError("model", "unknown model '" + m + "' (expected pure_stable, stable_ou, mean_field_eta or counterexample)");
  return m;
}

inline CoefficientSet model(const Json& c, std::size_t dim, double alpha) {
  ModelParams p;
  p.dim = dim;
  p.eta = c.contains("eta") ? number(c, "eta") : 0.5;
  p.alpha = alpha;
  p.rho = c.contains("rho") ? number(c, "rho") : 0.05;
  const std::string name = model_name(c);
  try {
    return make_model(name, p);
  } catch (const InvalidArgument& e) {
    throw ConfigError("model", e.what());
  }
}

inline InitialLaw initial_law(const Json& c, std::size_t dim) {
  auto x0 = numbers(c, "x0");
  check(x0.size() == 1 || x0.size() == dim, "x0", "needs 1 or dim entries");
  if (x0.size() == 1) x0.assign(dim, x0[0]);
  return InitialLaw::dirac(std::move(x0));
}

inline DistanceOptions distance(const Json& c) {
  DistanceOptions o;
  if (!c.contains("distance")) return o;
  const Json& d = c["distance"];
  o.exact_max = static_cast<std::size_t>(count(d, "exact_max"));
  o.subsample_size = static_cast<std::size_t>(count(d, "subsample_size"));
  o.subsample_reps = static_cast<std::size_t>(count(d, "subsample_reps"));
  check(o.subsample_size >= 2, "distance.subsample_size", "must be >= 2");
  check(o.subsample_reps >= 1, "distance.subsample_reps", "must be >= 1");
  return o;
}

}  // namespace field

inline Json distance_defaults() {
  const DistanceOptions o;
  return Json{{"exact_max", o.exact_max}, {"subsample_size", o.subsample_size}, {"subsample_reps", o.subsample_reps}};
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j)
    out[j] = lo * std::pow(hi / lo, static_cast<double>(j) / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

// ---- subcommands ----------------------------------------------------------

struct Subcommand {
  std::string name;
  Json defaults;
  std::set<std::string> number_or_string;
};

inline const std::vector<Subcommand>& subcommands() {
  static const std::vector<Subcommand> all = [] {
    std::vector<Subcommand> v;
    v.push_back({"sample",
                 Json{{"alpha", 1.0}, {"dim", 1}, {"convention", "generator_half"}, {"t", 1.0}, {"n", 1000},
                      {"method", "direct"}, {"seed", 1}},
                 {}});
    v.push_back({"density",
                 Json{{"alpha", 1.0}, {"convention", "generator_half"}, {"t", 1.0}, {"x_min", -10.0}, {"x_max", 10.0},
                      {"points", 2001}},
                 {}});
    v.push_back({"wass", Json{{"mu", ""}, {"nu", ""}, {"kappa", 0.5}, {"seed", 1}, {"distance", distance_defaults()}},
                 {}});
    v.push_back({"simulate",
                 Json{{"model", "mean_field_eta"}, {"alpha", 0.9}, {"convention", "generator_half"}, {"dim", 1},
                      {"eta", 0.6}, {"rho", 0.05}, {"x0", {1.0}}, {"T", 1.0}, {"M", 100}, {"N", 1000},
                      {"paths_every", 0}, {"marginal_every", 1}, {"seed", 1}},
                 {}});
    v.push_back({"picard",
                 Json{{"model", "mean_field_eta"}, {"alpha", 0.9}, {"convention", "generator_half"}, {"dim", 1},
                      {"eta", 0.6}, {"rho", 0.05}, {"x0", {1.0}}, {"delta", "auto"}, {"target_ratio", 0.5},
                      {"tol", 1e-3}, {"max_iter", 20}, {"N", 10000}, {"M", 100}, {"T", 1.0},
                      {"start", "constant_law"}, {"noise_floor_reps", 2}, {"write_iterates", true},
                      {"distance", distance_defaults()}, {"seed", 1}},
                 {"delta"}});
    v.push_back({"probe",
                 Json{{"case", "grad"}, {"model", "pure_stable"}, {"alpha", 1.0}, {"convention", "generator_half"},
                      {"eta", 0.5}, {"lags", log_spaced(0.05, 2.0, 8)}, {"N", 20000}, {"steps", 1},
                      {"batches", 40}, {"bootstrap_reps", 400}, {"h_factor", 0.1}, {"grid_factor", 0.05},
                      {"half_points", 400}, {"seed", 1}},
                 {}});
    v.push_back({"counterexample",
                 Json{{"alpha", 0.75}, {"rho", 0.05}, {"tol", 1e-3}, {"method", "QUADRATURE"}, {"T", 1.0},
                      {"M", 100}, {"N", 10000}, {"wasserstein_points", 100000}, {"seed", 1}},
                 {}});
    return v;
  }();
  return all;
}

inline const Subcommand& find_subcommand(const std::string& name) {
  for (const auto& s : subcommands())
    if (s.name == name) return s;
  throw InvalidArgument("unknown subcommand '" + name + "'");
}

/// Defaults, then the config file, then flag overrides; tagged with the
/// schema version and subcommand.
inline Json resolve_config(const std::string& subcommand, const Json& file, const Json& flags) {
  const auto& sc = find_subcommand(subcommand);
  Json merged = merge_config(sc.defaults, file, sc.number_or_string);
  merged = merge_config(merged, flags, sc.number_or_string);
  Json out;
  out["schema_version"] = kConfigSchemaVersion;
  out["subcommand"] = subcommand;
  for (const auto& [k, v] : merged.items()) out[k] = v;
  return out;
}

namespace detail {

inline void run_sample(const Json& c, RunDirectory& out) {
  const StableSpec spec{field::alpha(c), field::positive(c, "dim"), field::convention(c)};
  const double t = field::number(c, "t");
  field::check(t > 0.0, "t", "must be > 0");
  const std::size_t n = field::positive(c, "n");
  const std::string method = field::text(c, "method");
  const RngStream rng(field::count(c, "seed"));
  Points x;
  if (method == "direct")
    x = sample_sym_stable(spec, t, n, rng);
  else if (method == "subordinated")
    x = sample_subordinated(spec, t, n, rng, true);
  else
    throw ConfigError("method", "unknown method '" + method + "' (expected direct or subordinated)");
  out.write_csv("samples.csv", points_csv(x));
}

inline void run_density(const Json& c, RunDirectory& out) {
  const double alpha = field::alpha(c);
  const Convention conv = field::convention(c);
  const double t = field::number(c, "t");
  field::check(t > 0.0, "t", "must be > 0");
  const double lo = field::number(c, "x_min"), hi = field::number(c, "x_max");
  field::check(hi > lo, "x_max", "must exceed x_min");
  const std::size_t m = field::positive(c, "points");
  field::check(m >= 2, "points", "must be >= 2");
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
  x.back() = hi;
  DensityResult d;
  try {
    d = stable_density_1d(alpha, conv, t, x);
  } catch (const GridTooCoarse& e) {
    throw ConfigError("points", e.what());
  }
  CsvWriter csv({"x", "p"});
  for (std::size_t i = 0; i < m; ++i) csv.row({x[i], d.values[i]});
  out.write_csv("density.csv", csv);
  out.write_json("density.json", Json{{"grid_mass", d.grid_mass}, {"tail_mass", d.tail_mass},
                                      {"total_mass", d.total_mass}});
}

inline Json run_wass(const Json& c, RunDirectory& out) {
  const std::string mu_path = field::text(c, "mu"), nu_path = field::text(c, "nu");
  field::check(!mu_path.empty(), "mu", "path to a point-cloud CSV is required");
  field::check(!nu_path.empty(), "nu", "path to a point-cloud CSV is required");
  const double kappa = field::number(c, "kappa");
  field::check(kappa > 0.0 && kappa <= 1.0, "kappa", "must lie in (0, 1]");
  const auto mu = read_points_csv(mu_path);
  const auto nu = read_points_csv(nu_path);
  field::check(mu.dim() == nu.dim(), "nu", "dimension differs from mu");
  const auto est = wasserstein_estimate(mu, nu, kappa, field::distance(c), RngStream(field::count(c, "seed")));
  const double lb = holder_dual_lb(mu, nu, kappa);
  Json j{{"primal", est.value}, {"primal_std_error", est.std_error}, {"exact", est.exact},
         {"dual_lower_bound", lb}, {"gap", est.value - lb}};
  out.write_json("wass.json", j);
  return j;
}

inline void run_simulate(const Json& c, RunDirectory& out) {
  const std::size_t dim = field::positive(c, "dim");
  const double alpha = field::alpha(c);
  const StableSpec spec{alpha, dim, field::convention(c)};
  const auto model = field::model(c, dim, alpha);
  const double T = field::number(c, "T");
  field::check(T > 0.0, "T", "must be > 0");
  const auto grid = TimeGrid::uniform(T, field::positive(c, "M"));
  const std::size_t N = field::positive(c, "N");
  const auto paths_every = static_cast<std::size_t>(field::count(c, "paths_every"));
  const std::size_t marginal_every = field::positive(c, "marginal_every");
  const auto res = euler_mckean_particles(model, spec, field::initial_law(c, dim), grid, N,
                                          RngStream(field::count(c, "seed")));
  for (std::size_t k = 0; k < grid.size(); k += marginal_every) {
    char name[48];
    std::snprintf(name, sizeof(name), "marginals/node_%04zu.csv", k);
    out.write_csv(name, points_csv(res.flow[k].points()));
  }
  if (paths_every > 0) {
    std::vector<std::string> header{"particle", "t"};
    for (std::size_t k = 0; k < dim; ++k) header.push_back("x_" + std::to_string(k + 1));
    CsvWriter csv(header);
    std::vector<std::string> cells(dim + 2);
    for (std::size_t i = 0; i < N; i += paths_every)
      for (std::size_t k = 0; k < grid.size(); ++k) {
        cells[0] = std::to_string(i);
        cells[1] = format_double(grid[k]);
        const auto x = res.paths.at(i, k);
        for (std::size_t q = 0; q < dim; ++q) cells[q + 2] = format_double(x[q]);
        csv.row(cells);
      }
    out.write_csv("paths.csv", csv);
  }
  CsvWriter grid_csv({"node", "t"});
  for (std::size_t k = 0; k < grid.size(); ++k) grid_csv.row({double(k), grid[k]});
  out.write_csv("grid.csv", grid_csv);
}

inline void run_picard(const Json& c, RunDirectory& out) {
  const std::size_t dim = field::positive(c, "dim");
  const double alpha = field::alpha(c);
  const StableSpec spec{alpha, dim, field::convention(c)};
  const auto model = field::model(c, dim, alpha);
  const auto init = field::initial_law(c, dim);
  PicardConfig pc;
  pc.eta = field::number(c, "eta");
  pc.tol = field::number(c, "tol");
  pc.max_iter = field::positive(c, "max_iter");
  pc.particles = field::positive(c, "N");
  const double T = field::number(c, "T");
  field::check(T > 0.0, "T", "must be > 0");
  pc.grid = TimeGrid::uniform(T, field::positive(c, "M"));
  try {
    pc.start = picard_start_from_string(field::text(c, "start"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("start", e.what());
  }
  pc.noise_floor_reps = field::positive(c, "noise_floor_reps");
  pc.distance = field::distance(c);
  const RngStream rng(field::count(c, "seed"));

  Json report;
  if (c["delta"].is_string()) {
    field::check(c["delta"].get<std::string>() == "auto", "delta", "expected a number or \"auto\"");
    const double target = field::number(c, "target_ratio");
    field::check(target > 0.0, "target_ratio", "must be > 0");
    pc.delta = 1.0;
    try {
      pc.validate(model, spec);
    } catch (const InvalidArgument& e) {
      throw ConfigError("picard", e.what());
    }
    const auto choice = choose_delta(model, spec, init, pc, target, rng.substream(1));
    pc.delta = choice.delta;
    Json sweep = Json::array();
    for (const auto& [d, r] : choice.sweep) sweep.push_back({d, r});
    report["delta_choice"] = {{"target", target}, {"initial_guess", choice.initial_guess},
                              {"delta", choice.delta}, {"measured_ratio", choice.measured_ratio},
                              {"satisfied", choice.satisfied}, {"sweep", sweep}};
  } else {
    pc.delta = field::number(c, "delta");
  }
  try {
    pc.validate(model, spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError("picard", e.what());
  }
  const bool write_iterates = c["write_iterates"].get<bool>();
  const auto res = picard_iterate(model, spec, init, pc, rng, write_iterates);
  Json main = to_json(res.report);
  for (const auto& [k, v] : main.items()) report[k] = v;
  try {
    const auto cr = contraction_rate(res.report);
    report["contraction_rate"] = {{"ratio", cr.ratio}, {"ci", {cr.ci_low, cr.ci_high}},
                                  {"iterations_used", cr.iterations_used}};
  } catch (const InsufficientData& e) {
    report["contraction_rate"] = {{"error", e.what()}};
  }
  out.write_json("picard_report.json", report);
  if (write_iterates) {
    const std::size_t last = pc.grid.steps();
    for (std::size_t k = 0; k < res.iterates.size(); ++k) {
      char name[48];
      std::snprintf(name, sizeof(name), "iterates/iter_%02zu_T.csv", k);
      out.write_csv(name, points_csv(res.iterates[k][last].points()));
    }
  }
  out.write_csv("fixed_point_T.csv", points_csv(res.flow[pc.grid.steps()].points()));
}

inline void run_probe(const Json& c, RunDirectory& out) {
  const std::string which = field::text(c, "case");
  field::check(which == "grad" || which == "frac", "case", "expected grad or frac");
  const double alpha = field::alpha(c);
  const std::size_t dim = 1;
  const StableSpec spec{alpha, dim, field::convention(c)};
  const std::string m = field::model_name(c);
  field::check(m == "pure_stable" || m == "stable_ou", "model", "probes need a measure-independent model");
  const auto model = field::model(c, dim, alpha);
  const double eta = field::number(c, "eta");
  field::check(eta > 0.0 && eta <= 1.0, "eta", "must lie in (0, 1]");
  ProbeOptions o;
  o.steps = field::positive(c, "steps");
  o.batches = field::positive(c, "batches");
  o.bootstrap_reps = field::positive(c, "bootstrap_reps");
  o.h_factor = field::number(c, "h_factor");
  o.grid_factor = field::number(c, "grid_factor");
  o.half_points = field::positive(c, "half_points");
  const auto lags = field::numbers(c, "lags");
  const std::size_t N = field::positive(c, "N");
  const RngStream rng(field::count(c, "seed"));
  ProbeResult r;
  try {
    r = which == "grad" ? grad_decay_probe(model, spec, nullptr, abs_power_function(eta), lags, N, rng, o)
                        : frac_deriv_decay_probe(model, spec, nullptr, abs_power_function(eta), lags, N, rng, o);
  } catch (const InvalidArgument& e) {
    throw ConfigError("probe", e.what());
  }
  CsvWriter csv({"lag", "estimate", "stderr"});
  for (std::size_t j = 0; j < r.lags.size(); ++j) csv.row({r.lags[j], r.estimates[j], r.std_errors[j]});
  out.write_csv("probe.csv", csv);
  out.write_json("probe.json", to_json(r));
}

inline void run_counterexample(const Json& c, RunDirectory& out) {
  const double alpha = field::number(c, "alpha");
  field::check(alpha > 0.5 && alpha < 1.0, "alpha", "must lie in (1/2, 1)");
  const double rho = field::number(c, "rho");
  field::check(rho >= 0.0, "rho", "must be >= 0");
  const double tol = field::number(c, "tol");
  field::check(tol > 0.0, "tol", "must be > 0");
  RootMethod method;
  try {
    method = root_method_from_string(field::text(c, "method"));
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError("method", e.what());
  }
  const double T = field::number(c, "T");
  field::check(T > 0.0, "T", "must be > 0");
  const auto grid = TimeGrid::uniform(T, field::positive(c, "M"));
  const std::size_t N = field::positive(c, "N");
  field::check(N >= 2, "N", "must be >= 2");
  VerifyOptions vo;
  vo.wasserstein_points = field::positive(c, "wasserstein_points");
  field::check(vo.wasserstein_points >= 2, "wasserstein_points", "must be >= 2");
  const RngStream rng(field::count(c, "seed"));
  const auto root = solve_fixed_point(alpha, rho, tol, method, rng.substream(1));
  out.write_json("root.json", to_json(root));
  field::check(root.rho > 0.0, "rho", "verification needs rho > 0");
  const auto v = verify_two_solutions(root, grid, N, rng.substream(2), vo);
  out.write_json("verify.json", to_json(v));
  CsvWriter csv({"index", "symmetric", "shifted"});
  for (std::size_t i = 0; i < v.symmetric_law_T.size(); ++i)
    csv.row({double(i), v.symmetric_law_T[i], v.shifted_law_T[i]});
  out.write_csv("laws_t1.csv", csv);
}

}  // namespace detail

/// Runs a subcommand on a resolved config. The returned JSON is printed
/// by the command-line tool (non-empty for `wass` only).
inline Json run_subcommand(const Json& resolved, RunDirectory& out) {
  const std::string name = resolved.at("subcommand").get<std::string>();
  if (name == "sample") detail::run_sample(resolved, out);
  else if (name == "density") detail::run_density(resolved, out);
  else if (name == "wass") return detail::run_wass(resolved, out);
  else if (name == "simulate") detail::run_simulate(resolved, out);
  else if (name == "picard") detail::run_picard(resolved, out);
  else if (name == "probe") detail::run_probe(resolved, out);
  else if (name == "counterexample") detail::run_counterexample(resolved, out);
  else throw InvalidArgument("unknown subcommand '" + name + "'");
  return Json();
}

}  // namespace stablemv
