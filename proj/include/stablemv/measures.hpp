#pragma once

// Empirical measures, measure flows on a time grid, and the concave-cost
// transport distance W_kappa(mu, nu) = inf_pi int |x - y|^kappa d pi
// (no outer root), together with its Hoelder dual lower bound and the
// exponentially weighted sup-distance between flows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stablemv/core.hpp"
#include "stablemv/points.hpp"
#include "stablemv/rng.hpp"
#include "stablemv/transport.hpp"

namespace stablemv {

inline double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
  return std::sqrt(s);
}

/// Weighted point cloud sum_i w_i delta_{x_i}.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;

  /// Equal weights 1/n.
  explicit EmpiricalMeasure(Points points) : points_(std::move(points)), uniform_(true) {
    require(points_.size() >= 1, "empirical measure needs at least one point");
    weights_.assign(points_.size(), 1.0 / static_cast<double>(points_.size()));
  }

  EmpiricalMeasure(Points points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)), uniform_(false) {
    require(points_.size() >= 1, "empirical measure needs at least one point");
    require(weights_.size() == points_.size(), "weights and points differ in count");
    double total = 0.0;
    for (double w : weights_) {
      require(std::isfinite(w) && w >= 0.0, "weights must be finite and nonnegative");
      total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "weights must sum to 1 within 1e-12");
  }

  static EmpiricalMeasure dirac(std::span<const double> x) {
    return EmpiricalMeasure(Points(x.size(), std::vector<double>(x.begin(), x.end())));
  }

  /// Equal-weight measure on scalar values.
  static EmpiricalMeasure from_values(std::vector<double> values) {
    return EmpiricalMeasure(Points(1, std::move(values)));
  }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.dim(); }
  bool uniform() const { return uniform_; }
  const Points& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  std::span<const double> point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  /// sum_i w_i f(x_i)
  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += weights_[i] * f(points_[i]);
    return s;
  }

  /// gamma(|.|^eta)
  double moment(double eta) const {
    return integrate([eta](std::span<const double> x) { return std::pow(norm(x), eta); });
  }

  EmpiricalMeasure translated(std::span<const double> v) const {
    require(v.size() == dim(), "translation vector has the wrong dimension");
    EmpiricalMeasure out = *this;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t k = 0; k < dim(); ++k) out.points_[i][k] += v[k];
    return out;
  }

  EmpiricalMeasure translated(double v) const { return translated(std::vector<double>(dim(), v)); }

  /// The first m points with equal weights (m <= size()).
  EmpiricalMeasure head(std::size_t m) const {
    require(m >= 1 && m <= size(), "head size out of range");
    std::vector<double> flat(points_.flat().begin(), points_.flat().begin() + static_cast<std::ptrdiff_t>(m * dim()));
    return EmpiricalMeasure(Points(dim(), std::move(flat)));
  }

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

 private:
  Points points_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

/// Strictly increasing time nodes starting at 0.
class TimeGrid {
 public:
  TimeGrid() : nodes_{0.0} {}
  explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    require(!nodes_.empty(), "time grid is empty");
    require(nodes_.front() == 0.0, "time grid must start at 0");
    for (std::size_t k = 1; k < nodes_.size(); ++k)
      require(nodes_[k] > nodes_[k - 1], "time grid must be strictly increasing");
  }

  /// M steps of size T / M.
  static TimeGrid uniform(double T, std::size_t M) {
    require(T > 0.0 && std::isfinite(T), "horizon T must be > 0");
    require(M >= 1, "number of steps M must be >= 1");
    std::vector<double> nodes(M + 1);
    for (std::size_t k = 0; k <= M; ++k) nodes[k] = T * static_cast<double>(k) / static_cast<double>(M);
    nodes[M] = T;
    return TimeGrid(std::move(nodes));
  }

  std::size_t size() const { return nodes_.size(); }
  std::size_t steps() const { return nodes_.size() - 1; }
  double operator[](std::size_t k) const { return nodes_[k]; }
  double horizon() const { return nodes_.back(); }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Largest k with nodes[k] <= t (left endpoint).
  std::size_t left_index(double t) const {
    const double slack = 1e-12 * std::max(1.0, horizon());
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t + slack);
    require(it != nodes_.begin(), "time before the first grid node");
    return static_cast<std::size_t>(it - nodes_.begin()) - 1;
  }

  /// True if every node of `coarse` is (up to rounding) a node of this grid.
  bool refines(const TimeGrid& coarse) const {
    const double slack = 1e-9 * std::max(1.0, horizon());
    if (coarse.horizon() > horizon() + slack) return false;
    for (double t : coarse.nodes_) {
      const std::size_t k = left_index(t);
      if (std::abs(nodes_[k] - t) > slack) return false;
    }
    return true;
  }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  std::vector<double> nodes_;
};

/// One empirical measure per grid node; read piecewise constant in time.
class MeasureFlow {
 public:
  MeasureFlow() = default;
  MeasureFlow(TimeGrid grid, std::vector<EmpiricalMeasure> measures)
      : grid_(std::move(grid)), measures_(std::move(measures)) {
    require(measures_.size() == grid_.size(), "flow needs exactly one measure per grid node");
    for (const auto& m : measures_) require(m.dim() == measures_.front().dim(), "flow measures differ in dimension");
  }

  /// The same measure at every node.
  static MeasureFlow constant(TimeGrid grid, const EmpiricalMeasure& m) {
    std::vector<EmpiricalMeasure> ms(grid.size(), m);
    return MeasureFlow(std::move(grid), std::move(ms));
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return measures_.size(); }
  std::size_t dim() const { return measures_.front().dim(); }
  const EmpiricalMeasure& operator[](std::size_t k) const { return measures_[k]; }
  EmpiricalMeasure& operator[](std::size_t k) { return measures_[k]; }
  const std::vector<EmpiricalMeasure>& measures() const { return measures_; }

  /// Measure in force at time t (left endpoint).
  const EmpiricalMeasure& at(double t) const { return measures_[grid_.left_index(t)]; }

  MeasureFlow translated(double v) const {
    MeasureFlow out = *this;
    for (auto& m : out.measures_) m = m.translated(v);
    return out;
  }

 private:
  TimeGrid grid_;
  std::vector<EmpiricalMeasure> measures_;
};

namespace detail {

inline void check_kappa(double kappa) {
  require(kappa > 0.0 && kappa <= 1.0, "kappa must lie in (0, 1]");
}

inline CostMatrix kappa_costs(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa,
                              std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
  CostMatrix c(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      c(i, j) = std::pow(distance(mu.point(rows[i]), nu.point(cols[j])), kappa);
  return c;
}

/// Indices ordered by first coordinate (a good north-west-corner start).
inline std::vector<std::size_t> order_by_first(const EmpiricalMeasure& m) {
  std::vector<std::size_t> idx(m.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return m.point(a)[0] < m.point(b)[0]; });
  return idx;
}

/// Level chains of two equal-size point sets on the line. Some optimal
/// matching for a concave cost of |x - y| is nested, and a nested arc joins
/// two crossings of the same level of the walk that steps +1 at each x and
/// -1 at each y in sorted order. The crossings of one level alternate in
/// colour, so each chain is an independent non-crossing matching problem.
inline std::vector<std::vector<double>> line_chains(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), "line matching needs equal sizes");
  std::vector<std::pair<double, int>> merged;
  merged.reserve(2 * x.size());
  for (double v : x) merged.emplace_back(v, +1);
  for (double v : y) merged.emplace_back(v, -1);
  std::sort(merged.begin(), merged.end());
  std::map<long, std::vector<double>> by_level;
  long level = 0;
  for (const auto& [v, step] : merged) {
    const long next = level + step;
    by_level[std::min(level, next)].push_back(v);
    level = next;
  }
  std::vector<std::vector<double>> out;
  out.reserve(by_level.size());
  for (auto& [lvl, z] : by_level) out.push_back(std::move(z));
  return out;
}

/// Work of the interval programme over the chains, sum of m^3.
inline double chain_work(const std::vector<std::vector<double>>& chains) {
  double w = 0.0;
  for (const auto& z : chains) w += std::pow(static_cast<double>(z.size()), 3.0);
  return w;
}

/// Optimal matching cost sum |x_i - y_pi(i)|^kappa, kappa <= 1, from the
/// chains by interval dynamic programming.
inline double line_matching_cost(const std::vector<std::vector<double>>& chains, double kappa) {
  double total = 0.0;
  std::vector<double> F, C;
  for (const auto& z : chains) {
    const std::size_t m = z.size();
    if (m == 2) {
      total += std::pow(z[1] - z[0], kappa);
      continue;
    }
    // F[a * (m + 1) + b]: cost of the block z[a..b), b - a even
    F.assign((m + 1) * (m + 1), 0.0);
    C.assign(m * m, 0.0);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = a + 1; k < m; k += 2) C[a * m + k] = std::pow(z[k] - z[a], kappa);
    auto at = [&](std::size_t a, std::size_t b) -> double& { return F[a * (m + 1) + b]; };
    for (std::size_t len = 2; len <= m; len += 2) {
      for (std::size_t a = 0; a + len <= m; ++a) {
        const std::size_t b = a + len;
        double best = INFINITY;
        for (std::size_t k = a + 1; k < b; k += 2) best = std::min(best, C[a * m + k] + at(a + 1, k) + at(k + 1, b));
        at(a, b) = best;
      }
    }
    total += at(0, m);
  }
  return total;
}

}  // namespace detail

/// Exact W_kappa. One-dimensional equal-size equal-weight clouds use the
/// level chains when those are short; other equal-size equal-weight clouds
/// go through the assignment solver and everything else through the
/// transportation simplex.
inline double wasserstein_kappa(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa) {
  detail::check_kappa(kappa);
  require(mu.dim() == nu.dim(), "measures differ in dimension");
  if (mu.size() == 1 || nu.size() == 1) {
    // the only coupling is the product one
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      for (std::size_t j = 0; j < nu.size(); ++j)
        s += mu.weight(i) * nu.weight(j) * std::pow(distance(mu.point(i), nu.point(j)), kappa);
    return s;
  }
  if (mu.uniform() && nu.uniform() && mu.size() == nu.size() && mu.dim() == 1) {
    const auto chains = detail::line_chains(mu.points().flat(), nu.points().flat());
    // nearly coincident clouds form one long chain; the assignment solver is cheaper there
    if (detail::chain_work(chains) <= std::pow(static_cast<double>(mu.size()), 3.0))
      return detail::line_matching_cost(chains, kappa) / static_cast<double>(mu.size());
  }
  if (mu.uniform() && nu.uniform() && mu.size() == nu.size()) {
    std::vector<std::size_t> all(mu.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const CostMatrix c = detail::kappa_costs(mu, nu, kappa, all, all);
    const auto assignment = solve_assignment(c);
    double s = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) s += c(i, assignment[i]);
    return s / static_cast<double>(mu.size());
  }
  const auto rows = detail::order_by_first(mu);
  const auto cols = detail::order_by_first(nu);
  const CostMatrix c = detail::kappa_costs(mu, nu, kappa, rows, cols);
  std::vector<double> a(rows.size()), b(cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) a[i] = mu.weight(rows[i]);
  for (std::size_t j = 0; j < cols.size(); ++j) b[j] = nu.weight(cols[j]);
  return solve_transport(a, b, c).cost;
}

/// Cost of the coupling x_i <-> y_i (equal sizes, equal weights); an upper
/// bound on W_kappa.
inline double identity_coupling_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa) {
  require(mu.size() == nu.size() && mu.dim() == nu.dim(), "identity coupling needs equal shapes");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) s += std::pow(distance(mu.point(i), nu.point(i)), kappa);
  return s / static_cast<double>(mu.size());
}

/// m-point equal-weight resample drawn i.i.d. from mu. As an estimator of
/// W_kappa between the parent measures the resampled distance is biased
/// upward.
inline EmpiricalMeasure subsample(const EmpiricalMeasure& mu, std::size_t m, const RngStream& rng) {
  require(m >= 1, "subsample size must be >= 1");
  RandomSource src = rng.source();
  std::vector<double> cdf(mu.size());
  std::partial_sum(mu.weights().begin(), mu.weights().end(), cdf.begin());
  Points out(m, mu.dim());
  for (std::size_t r = 0; r < m; ++r) {
    std::size_t i;
    if (mu.uniform()) {
      i = src.index(mu.size());
    } else {
      const double u = src.uniform_open() * cdf.back();
      i = std::min<std::size_t>(static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
                                mu.size() - 1);
    }
    std::copy(mu.point(i).begin(), mu.point(i).end(), out[r].begin());
  }
  return EmpiricalMeasure(std::move(out));
}

struct DistanceOptions {
  std::size_t exact_max = 2048;     ///< larger clouds are subsampled
  std::size_t subsample_size = 256;
  std::size_t subsample_reps = 4;
  bool paired = true;  ///< equal-size clouds reuse the same subsample indices
};

struct DistanceEstimate {
  double value = 0.0;
  double std_error = 0.0;  ///< zero for exact values
  bool exact = true;
  std::size_t reps = 0;
};

namespace detail {

/// A distance computation split into preparation (subsample draws and a
/// cheap upper bound) and the LP solves.
struct PreparedDistance {
  const EmpiricalMeasure* mu = nullptr;  ///< exact path when set
  const EmpiricalMeasure* nu = nullptr;
  std::vector<std::pair<EmpiricalMeasure, EmpiricalMeasure>> subsamples;
  double bound = std::numeric_limits<double>::infinity();  ///< >= the value that solve() returns
};

inline PreparedDistance prepare_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa,
                                         const DistanceOptions& opts, const RngStream& rng) {
  check_kappa(kappa);
  require(mu.dim() == nu.dim(), "measures differ in dimension");
  PreparedDistance out;
  const bool matched = mu.uniform() && nu.uniform() && mu.size() == nu.size();
  if (std::max(mu.size(), nu.size()) <= opts.exact_max) {
    out.mu = &mu;
    out.nu = &nu;
    if (matched) out.bound = identity_coupling_cost(mu, nu, kappa);
    return out;
  }
  require(opts.subsample_reps >= 1 && opts.subsample_size >= 2, "subsampling needs reps >= 1 and size >= 2");
  const bool paired = opts.paired && matched;
  double bound = 0.0;
  for (std::size_t r = 0; r < opts.subsample_reps; ++r) {
    const RngStream s = rng.substream(r);
    if (paired) {
      RandomSource src = s.source();
      const std::size_t m = std::min(opts.subsample_size, mu.size());
      Points a(m, mu.dim()), b(m, nu.dim());
      for (std::size_t q = 0; q < m; ++q) {
        const std::size_t i = src.index(mu.size());
        std::copy(mu.point(i).begin(), mu.point(i).end(), a[q].begin());
        std::copy(nu.point(i).begin(), nu.point(i).end(), b[q].begin());
      }
      out.subsamples.emplace_back(EmpiricalMeasure(std::move(a)), EmpiricalMeasure(std::move(b)));
      bound += identity_coupling_cost(out.subsamples.back().first, out.subsamples.back().second, kappa);
    } else {
      auto a = mu.size() > opts.exact_max ? subsample(mu, std::min(opts.subsample_size, mu.size()), s.substream(0)) : mu;
      auto b = nu.size() > opts.exact_max ? subsample(nu, std::min(opts.subsample_size, nu.size()), s.substream(1)) : nu;
      out.subsamples.emplace_back(std::move(a), std::move(b));
    }
  }
  if (paired) out.bound = bound / static_cast<double>(opts.subsample_reps);
  return out;
}

inline DistanceEstimate solve_prepared(const PreparedDistance& p, double kappa) {
  if (p.mu != nullptr) return {wasserstein_kappa(*p.mu, *p.nu, kappa), 0.0, true, 0};
  std::vector<double> vals;
  for (const auto& [a, b] : p.subsamples) vals.push_back(wasserstein_kappa(a, b, kappa));
  DistanceEstimate out;
  out.exact = false;
  out.reps = vals.size();
  out.value = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
  if (vals.size() > 1) {
    double ss = 0.0;
    for (double v : vals) ss += (v - out.value) * (v - out.value);
    out.std_error = std::sqrt(ss / static_cast<double>(vals.size() - 1) / static_cast<double>(vals.size()));
  }
  return out;
}

}  // namespace detail

/// W_kappa, exact up to opts.exact_max points and otherwise the mean of
/// opts.subsample_reps subsampled exact distances with its standard error.
/// Equal-size equal-weight clouds are subsampled with shared indices
/// (opts.paired), which keeps coupled simulations coupled.
inline DistanceEstimate wasserstein_estimate(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa,
                                             const DistanceOptions& opts, const RngStream& rng) {
  return detail::solve_prepared(detail::prepare_distance(mu, nu, kappa, opts, rng), kappa);
}

/// Test function for the dual bound, with a human-readable label.
struct HolderWitness {
  std::function<double(std::span<const double>)> f;
  std::string label;
};

/// {x -> |x - a|^kappa} for anchors a in the union of supports (at most
/// `max_anchors`, evenly spaced through the union when there are more).
inline std::vector<HolderWitness> default_holder_witnesses(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                                           double kappa, std::size_t max_anchors = 64) {
  detail::check_kappa(kappa);
  const std::size_t total = mu.size() + nu.size();
  const std::size_t count = std::min(total, max_anchors);
  std::vector<HolderWitness> out;
  for (std::size_t q = 0; q < count; ++q) {
    const std::size_t k = count == total ? q : q * total / count;
    const auto p = k < mu.size() ? mu.point(k) : nu.point(k - mu.size());
    std::vector<double> anchor(p.begin(), p.end());
    out.push_back({[anchor, kappa](std::span<const double> x) { return std::pow(distance(x, anchor), kappa); },
                   "|x - a|^kappa, a = support point " + std::to_string(k)});
  }
  return out;
}

/// max_f |mu(f) - nu(f)| over witnesses; each witness must satisfy
/// |f(x) - f(y)| <= |x - y|^kappa on every pair of support points.
inline double holder_dual_lb(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa,
                             const std::vector<HolderWitness>& witnesses) {
  detail::check_kappa(kappa);
  require(mu.dim() == nu.dim(), "measures differ in dimension");
  std::vector<std::span<const double>> support;
  for (std::size_t i = 0; i < mu.size(); ++i) support.push_back(mu.point(i));
  for (std::size_t j = 0; j < nu.size(); ++j) support.push_back(nu.point(j));
  const std::size_t s = support.size();
  std::vector<double> dk(s * (s - 1) / 2);
  for (std::size_t i = 0, p = 0; i < s; ++i)
    for (std::size_t j = 0; j < i; ++j, ++p) dk[p] = std::pow(distance(support[i], support[j]), kappa);

  double best = 0.0;
  std::vector<double> fv(s);
  for (const auto& w : witnesses) {
    for (std::size_t i = 0; i < s; ++i) fv[i] = w.f(support[i]);
    for (std::size_t i = 0, p = 0; i < s; ++i)
      for (std::size_t j = 0; j < i; ++j, ++p)
        if (std::abs(fv[i] - fv[j]) > dk[p] * (1.0 + 1e-12) + 1e-15)
          throw InvalidArgument("witness '" + w.label + "' has kappa-Hoelder seminorm > 1 on the supports");
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) a += mu.weight(i) * fv[i];
    for (std::size_t j = 0; j < nu.size(); ++j) b += nu.weight(j) * fv[mu.size() + j];
    best = std::max(best, std::abs(a - b));
  }
  return best;
}

inline double holder_dual_lb(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double kappa) {
  return holder_dual_lb(mu, nu, kappa, default_holder_witnesses(mu, nu, kappa));
}

struct FlowDistance {
  double value = 0.0;             ///< max_k e^{-delta t_k} W_eta(f1_k, f2_k)
  double unweighted_sup = 0.0;    ///< max of W_eta over evaluated nodes
  std::size_t argmax = 0;
  std::vector<double> node_values;  ///< weighted per-node values; NaN where pruned
  bool exact = true;
  double std_error = 0.0;         ///< of the maximizing node (subsampled path)
};

/// sup over grid nodes of e^{-delta t_k} W_eta(f1_k, f2_k). Nodes are
/// visited in decreasing order of an upper bound (identity coupling of the
/// clouds or of their paired subsamples) and skipped once the bound cannot
/// beat the running maximum, which leaves the weighted value unchanged.
/// `unweighted_sup` covers the evaluated nodes only; use flow_sup_distance
/// for the exact unweighted value.
inline FlowDistance flow_distance_report(const MeasureFlow& f1, const MeasureFlow& f2, double eta, double delta,
                                         const DistanceOptions& opts = {}, const RngStream& rng = RngStream(0),
                                         bool prune = true) {
  detail::check_kappa(eta);
  require(delta >= 0.0 && std::isfinite(delta), "delta must be >= 0");
  require(f1.grid() == f2.grid(), "flows live on different time grids");
  require(f1.dim() == f2.dim(), "flows differ in dimension");
  const std::size_t n = f1.size();
  FlowDistance out;
  out.node_values.assign(n, std::numeric_limits<double>::quiet_NaN());

  std::vector<detail::PreparedDistance> prepared;
  std::vector<double> bound(n);
  prepared.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    prepared.push_back(detail::prepare_distance(f1[k], f2[k], eta, opts, rng.substream(k)));
    bound[k] = prune ? std::exp(-delta * f1.grid()[k]) * prepared[k].bound : std::numeric_limits<double>::infinity();
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bound[a] > bound[b]; });

  bool first = true;
  for (std::size_t k : order) {
    if (!first && bound[k] <= out.value) continue;
    const double w = std::exp(-delta * f1.grid()[k]);
    const auto est = detail::solve_prepared(prepared[k], eta);
    out.node_values[k] = w * est.value;
    out.exact = out.exact && est.exact;
    out.unweighted_sup = std::max(out.unweighted_sup, est.value);
    if (first || w * est.value > out.value) {
      out.value = w * est.value;
      out.argmax = k;
      out.std_error = w * est.std_error;
    }
    first = false;
  }
  return out;
}

inline double flow_distance(const MeasureFlow& f1, const MeasureFlow& f2, double eta, double delta,
                            const DistanceOptions& opts = {}, const RngStream& rng = RngStream(0)) {
  return flow_distance_report(f1, f2, eta, delta, opts, rng).value;
}

/// Unweighted sup_k W_eta(f1_k, f2_k) over every node.
inline double flow_sup_distance(const MeasureFlow& f1, const MeasureFlow& f2, double eta,
                                const DistanceOptions& opts = {}, const RngStream& rng = RngStream(0)) {
  return flow_distance_report(f1, f2, eta, 0.0, opts, rng, true).value;
}

}  // namespace stablemv
