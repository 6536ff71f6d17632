#pragma once

// Explicit Euler scheme for
//   X_{k+1} = X_k + b_{t_k}(X_k, mu_{t_k}) dt_k + sigma_{t_k}(X_k, mu_{t_k}) dL_k
// with exact stable increments dL_k, either against a frozen measure flow
// or against the running empirical law of the particles.
//
// Particle i draws its increments from rng.substream(i) in step order, so
// a particle's noise does not depend on N, on the flow, or on the
// coefficients. Reusing one RngStream therefore couples runs through
// common random numbers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stablemv/coefficients.hpp"
#include "stablemv/core.hpp"
#include "stablemv/measures.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/stable_noise.hpp"
#include "stablemv/statistics.hpp"

namespace stablemv {

namespace detail {
inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
inline constexpr std::uint64_t kInitStream = 0x696e6974ULL;
}  // namespace detail

/// Law of X_0: an empirical measure or a user sampler.
class InitialLaw {
 public:
  using Sampler = std::function<void(RandomSource&, std::span<double>)>;

  /// When the measure has exactly N equal-weight points, particle i starts
  /// at point i; otherwise starting points are drawn i.i.d. from it.
  static InitialLaw from_measure(EmpiricalMeasure m) {
    InitialLaw law;
    law.dim_ = m.dim();
    law.measure_ = std::move(m);
    return law;
  }

  static InitialLaw dirac(std::vector<double> x) {
    return from_measure(EmpiricalMeasure::dirac(x));
  }

  static InitialLaw from_sampler(std::size_t dim, Sampler s) {
    require(dim >= 1, "initial law dimension must be >= 1");
    InitialLaw law;
    law.dim_ = dim;
    law.sampler_ = std::move(s);
    return law;
  }

  std::size_t dim() const { return dim_; }
  const std::optional<EmpiricalMeasure>& measure() const { return measure_; }

  /// Starting points for N particles.
  Points draw(std::size_t N, const RngStream& rng) const {
    Points out(N, dim_);
    if (measure_) {
      const auto& m = *measure_;
      if (m.size() == 1 || (m.uniform() && m.size() == N)) {
        for (std::size_t i = 0; i < N; ++i) {
          const auto p = m.point(m.size() == 1 ? 0 : i);
          std::copy(p.begin(), p.end(), out[i].begin());
        }
        return out;
      }
      const auto s = subsample(m, N, rng);
      return s.points();
    }
    for (std::size_t i = 0; i < N; ++i) {
      RandomSource src = rng.substream(i).source();
      sampler_(src, out[i]);
    }
    return out;
  }

 private:
  std::size_t dim_ = 1;
  std::optional<EmpiricalMeasure> measure_;
  Sampler sampler_;
};

/// Stable increments over the steps of a grid for N particles.
class NoiseTape {
 public:
  static NoiseTape generate(const StableSpec& spec, const TimeGrid& grid, std::size_t N, const RngStream& rng) {
    spec.validate();
    require(N >= 1, "particle count N must be >= 1");
    require(grid.steps() >= 1, "grid needs at least one step");
    NoiseTape tape;
    tape.spec_ = spec;
    tape.grid_ = grid;
    tape.n_ = N;
    const std::size_t M = grid.steps(), d = spec.dim;
    tape.inc_.resize(N * M * d);
    std::vector<double> scale(M);
    for (std::size_t k = 0; k < M; ++k) scale[k] = std::pow(grid[k + 1] - grid[k], 1.0 / spec.alpha);
    const RngStream base = rng.substream(detail::kNoiseStream);
    for (std::size_t i = 0; i < N; ++i) {
      RandomSource src = base.substream(i).source();
      for (std::size_t k = 0; k < M; ++k) {
        std::span<double> row(&tape.inc_[(i * M + k) * d], d);
        draw_unit_stable(spec, src, row);
        for (double& v : row) v *= scale[k];
      }
    }
    return tape;
  }

  /// Sums `factor` consecutive increments: the same noise path on a grid
  /// with factor-times fewer steps.
  NoiseTape coarsen(std::size_t factor) const {
    require(factor >= 1 && grid_.steps() % factor == 0, "coarsening factor must divide the step count");
    const std::size_t M = grid_.steps(), Mc = M / factor, d = spec_.dim;
    std::vector<double> nodes(Mc + 1);
    for (std::size_t k = 0; k <= Mc; ++k) nodes[k] = grid_[k * factor];
    NoiseTape out;
    out.spec_ = spec_;
    out.grid_ = TimeGrid(std::move(nodes));
    out.n_ = n_;
    out.inc_.assign(n_ * Mc * d, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < M; ++k)
        for (std::size_t q = 0; q < d; ++q) out.inc_[(i * Mc + k / factor) * d + q] += inc_[(i * M + k) * d + q];
    return out;
  }

  const StableSpec& spec() const { return spec_; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t particles() const { return n_; }
  std::span<const double> increment(std::size_t i, std::size_t k) const {
    const std::size_t d = spec_.dim;
    return {&inc_[(i * grid_.steps() + k) * d], d};
  }

 private:
  StableSpec spec_;
  TimeGrid grid_;
  std::size_t n_ = 0;
  std::vector<double> inc_;
};

/// N simulated paths on a grid. Storage is node-major so that each
/// marginal is contiguous.
class PathBundle {
 public:
  PathBundle() = default;
  PathBundle(TimeGrid grid, std::size_t N, std::size_t dim, double alpha, std::uint64_t seed, std::uint64_t stream)
      : grid_(std::move(grid)), n_(N), dim_(dim), alpha_(alpha), seed_(seed), stream_(stream),
        data_(grid_.size() * N * dim, 0.0) {}

  const TimeGrid& grid() const { return grid_; }
  std::size_t particles() const { return n_; }
  std::size_t dim() const { return dim_; }
  double alpha() const { return alpha_; }
  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }
  bool empty() const { return n_ == 0; }

  std::span<double> at(std::size_t i, std::size_t k) { return {&data_[(k * n_ + i) * dim_], dim_}; }
  std::span<const double> at(std::size_t i, std::size_t k) const { return {&data_[(k * n_ + i) * dim_], dim_}; }

  /// Equal-weight empirical law of the particles at node k.
  EmpiricalMeasure marginal(std::size_t k) const {
    const auto first = data_.begin() + static_cast<std::ptrdiff_t>(k * n_ * dim_);
    return EmpiricalMeasure(Points(dim_, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(n_ * dim_))));
  }

  MeasureFlow marginal_flow() const {
    std::vector<EmpiricalMeasure> ms;
    ms.reserve(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) ms.push_back(marginal(k));
    return MeasureFlow(grid_, std::move(ms));
  }

 private:
  TimeGrid grid_;
  std::size_t n_ = 0, dim_ = 1;
  double alpha_ = 1.0;
  std::uint64_t seed_ = 0, stream_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void check_simulation(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init,
                             const TimeGrid& grid, std::size_t N) {
  c.check();
  spec.validate();
  require(N >= 1, "particle count N must be >= 1");
  require(grid.steps() >= 1, "simulation grid needs at least one step");
  require(c.dim == spec.dim, "coefficient dimension differs from the noise dimension");
  require(init.dim() == spec.dim, "initial law dimension differs from the noise dimension");
  if (c.required_convention)
    require(*c.required_convention == spec.convention,
            "model '" + c.name + "' requires the " + to_string(*c.required_convention) + " noise convention");
}

/// Shared Euler loop; measure_at(k, bundle) yields the measure used at step k.
template <class MeasureAt>
PathBundle run_euler(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init, const TimeGrid& grid,
                     std::size_t N, const RngStream& rng, const NoiseTape* tape, MeasureAt&& measure_at) {
  check_simulation(c, spec, init, grid, N);
  std::optional<NoiseTape> own;
  if (tape == nullptr) {
    own = NoiseTape::generate(spec, grid, N, rng);
    tape = &*own;
  } else {
    require(tape->particles() >= N, "noise tape has fewer particles than requested");
    require(tape->grid() == grid, "noise tape grid differs from the simulation grid");
    require(tape->spec().alpha == spec.alpha && tape->spec().dim == spec.dim &&
                tape->spec().convention == spec.convention,
            "noise tape was generated for a different stable spec");
  }
  const std::size_t d = spec.dim, M = grid.steps();
  PathBundle out(grid, N, d, spec.alpha, rng.seed(), rng.stream_id());
  const Points x0 = init.draw(N, rng.substream(kInitStream));
  for (std::size_t i = 0; i < N; ++i) std::copy(x0[i].begin(), x0[i].end(), out.at(i, 0).begin());

  std::vector<double> b(d), s(d * d);
  for (std::size_t k = 0; k < M; ++k) {
    const double t = grid[k], dt = grid[k + 1] - grid[k];
    const EmpiricalMeasure& mu = measure_at(k, out);
    const std::vector<double> summary = c.summarize(t, mu);
    const MeasureArg arg{mu, summary};
    const bool const_sigma = !c.constant_diffusion.empty();
    if (const_sigma) s = c.constant_diffusion;
    for (std::size_t i = 0; i < N; ++i) {
      const auto x = out.at(i, k);
      auto y = out.at(i, k + 1);
      c.eval_drift(t, x, arg, b);
      if (!const_sigma) c.eval_diffusion(t, x, arg, s);
      const auto dl = tape->increment(i, k);
      for (std::size_t p = 0; p < d; ++p) {
        double v = x[p] + b[p] * dt;
        for (std::size_t q = 0; q < d; ++q) v += s[p * d + q] * dl[q];
        if (!std::isfinite(b[p]) || !std::isfinite(v))
          throw NumericalError("coefficient evaluation failure: non-finite state at step " + std::to_string(k) +
                               ", particle " + std::to_string(i));
        y[p] = v;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Frozen-flow Euler paths: the measure argument at step k is
/// flow.at(t_k); the particles never feed back into the coefficients.
inline PathBundle euler_frozen_flow(const CoefficientSet& c, const StableSpec& spec, const MeasureFlow& flow,
                                    const InitialLaw& init, const TimeGrid& grid, std::size_t N,
                                    const RngStream& rng, const NoiseTape* tape = nullptr) {
  require(flow.grid().refines(grid), "flow grid must refine or equal the simulation grid");
  require(flow.dim() == spec.dim, "flow dimension differs from the noise dimension");
  return detail::run_euler(c, spec, init, grid, N, rng, tape,
                           [&](std::size_t k, const PathBundle&) -> const EmpiricalMeasure& {
                             return flow.at(grid[k]);
                           });
}

struct McKeanResult {
  PathBundle paths;
  MeasureFlow flow;
};

/// Interacting particle system: the measure argument at step k is the
/// empirical law of the N particles at t_k.
inline McKeanResult euler_mckean_particles(const CoefficientSet& c, const StableSpec& spec, const InitialLaw& init,
                                           const TimeGrid& grid, std::size_t N, const RngStream& rng,
                                           const NoiseTape* tape = nullptr) {
  require(!c.measure_dependent() || N >= 2, "measure-dependent coefficients need N >= 2 particles");
  EmpiricalMeasure current;
  auto paths = detail::run_euler(c, spec, init, grid, N, rng, tape,
                                 [&](std::size_t k, const PathBundle& b) -> const EmpiricalMeasure& {
                                   current = b.marginal(k);
                                   return current;
                                 });
  auto flow = paths.marginal_flow();
  return {std::move(paths), std::move(flow)};
}

/// Per-path sup_k |X_{t_k}|^eta.
inline std::vector<double> path_sup_moments(const PathBundle& bundle, double eta) {
  std::vector<double> out(bundle.particles(), 0.0);
  for (std::size_t k = 0; k < bundle.grid().size(); ++k)
    for (std::size_t i = 0; i < bundle.particles(); ++i)
      out[i] = std::max(out[i], std::pow(norm(bundle.at(i, k)), eta));
  return out;
}

/// Monte-Carlo E sup_k |X_{t_k}|^eta with a bootstrap standard error.
inline MeanEstimate sup_moment(const PathBundle& bundle, double eta, const RngStream& rng = RngStream(0),
                               std::size_t bootstrap_reps = 200) {
  require(!bundle.empty(), "sup_moment of an empty bundle");
  require(eta > 0.0 && eta < bundle.alpha(), "sup_moment needs eta in (0, alpha)");
  const auto s = path_sup_moments(bundle, eta);
  MeanEstimate out = mean_with_se(s);
  if (s.size() >= 2)
    out.std_error = bootstrap_se(
        s, [](std::span<const double> x) { return mean_with_se(x).mean; }, bootstrap_reps, rng);
  return out;
}

}  // namespace stablemv
