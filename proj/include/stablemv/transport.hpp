#pragma once

// Exact solvers for discrete optimal transport with an arbitrary cost
// matrix: a shortest-augmenting-path assignment solver for equal-size,
// equal-weight problems and a primal transportation simplex (network
// simplex on the bipartite graph) for general weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "stablemv/core.hpp"

namespace stablemv {

/// Dense row-major cost matrix.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  CostMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

struct TransportCell {
  std::size_t row;
  std::size_t col;
  double mass;
};

struct TransportPlan {
  double cost = 0.0;
  std::vector<TransportCell> cells;  ///< nonzero (or basic) entries of the coupling
  std::size_t pivots = 0;
};

/// Minimum-cost perfect matching of a square cost matrix; returns the
/// column assigned to each row. O(n^3) Hungarian method with potentials.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& c) {
  require(c.rows == c.cols, "assignment needs a square cost matrix");
  const std::size_t n = c.rows;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      const double* row = &c.data[(i0 - 1) * n];
      const double ui0 = u[i0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui0 - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/// Exact transport between histograms `supply` (rows) and `demand`
/// (columns). Both are renormalized to unit mass. Starts from the
/// north-west-corner basis, so callers that sort both supports along a
/// line get a monotone starting coupling.
inline TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                                     const CostMatrix& c) {
  const std::size_t n = supply.size(), m = demand.size();
  require(n >= 1 && m >= 1, "transport problem needs nonempty marginals");
  require(c.rows == n && c.cols == m, "cost matrix shape does not match marginals");
  for (double a : supply) require(a >= 0.0 && std::isfinite(a), "supply weights must be finite and >= 0");
  for (double b : demand) require(b >= 0.0 && std::isfinite(b), "demand weights must be finite and >= 0");
  const double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
  require(sa > 0.0 && sb > 0.0, "marginals must carry positive mass");

  struct Basic {
    std::size_t row, col;
    double mass;
  };
  std::vector<Basic> basis;
  basis.reserve(n + m - 1);
  {
    std::vector<double> ra(n), rb(m);
    for (std::size_t i = 0; i < n; ++i) ra[i] = supply[i] / sa;
    for (std::size_t j = 0; j < m; ++j) rb[j] = demand[j] / sb;
    std::size_t i = 0, j = 0;
    while (true) {
      if (i == n - 1 && j == m - 1) {
        basis.push_back({i, j, std::max(0.0, std::min(ra[i], rb[j]))});
        break;
      }
      if ((ra[i] < rb[j] && i + 1 < n) || j + 1 == m) {
        const double x = std::min(ra[i], rb[j]);
        basis.push_back({i, j, x});
        rb[j] = std::max(0.0, rb[j] - x);
        ra[i] = 0.0;
        ++i;
      } else {
        const double x = std::min(ra[i], rb[j]);
        basis.push_back({i, j, x});
        ra[i] = std::max(0.0, ra[i] - x);
        rb[j] = 0.0;
        ++j;
      }
    }
  }

  // Tree nodes: rows 0..n-1, columns n..n+m-1. adj holds (neighbor, basis index).
  const std::size_t nodes = n + m;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(nodes);
  for (std::size_t k = 0; k < basis.size(); ++k) {
    adj[basis[k].row].push_back({n + basis[k].col, k});
    adj[n + basis[k].col].push_back({basis[k].row, k});
  }
  auto unlink = [&](std::size_t node, std::size_t k) {
    auto& lst = adj[node];
    lst.erase(std::find_if(lst.begin(), lst.end(), [&](const auto& e) { return e.second == k; }));
  };

  double cmax = 0.0;
  for (double x : c.data) cmax = std::max(cmax, std::abs(x));
  const double tol = 1e-12 * std::max(1.0, cmax);

  std::vector<double> pot(nodes);
  std::vector<std::size_t> parent_node(nodes), parent_edge(nodes), stack;
  std::vector<char> seen(nodes);
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  auto compute_potentials = [&] {
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, 0);
    pot[0] = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (auto [y, k] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        const double cost = c(basis[k].row, basis[k].col);
        // u_row + v_col = cost
        pot[y] = cost - pot[x];
        stack.push_back(y);
      }
    }
  };

  TransportPlan plan;
  std::size_t degenerate_run = 0;
  const std::size_t max_pivots = 50 * n * m + 1000;
  while (true) {
    compute_potentials();
    const bool bland = degenerate_run > 20 * (n + m);
    std::size_t ei = none, ej = none;
    double best = -tol;
    for (std::size_t i = 0; i < n && !(bland && ei != none); ++i) {
      const double* row = &c.data[i * m];
      const double ui = pot[i];
      for (std::size_t j = 0; j < m; ++j) {
        const double r = row[j] - ui - pot[n + j];
        if (r < best) {
          best = r;
          ei = i;
          ej = j;
          if (bland) break;
        }
      }
    }
    if (ei == none) break;
    if (++plan.pivots > max_pivots) throw NumericalError("transport simplex exceeded its pivot budget");

    // Tree path from column node back to the entering row.
    std::fill(seen.begin(), seen.end(), 0);
    stack.assign(1, ei);
    seen[ei] = 1;
    parent_node[ei] = none;
    const std::size_t target = n + ej;
    while (!stack.empty() && !seen[target]) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (auto [y, k] : adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        parent_node[y] = x;
        parent_edge[y] = k;
        stack.push_back(y);
      }
    }
    // Edges along the path starting at the column: odd positions lose mass.
    std::vector<std::size_t> path;
    for (std::size_t x = target; parent_node[x] != none; x = parent_node[x]) path.push_back(parent_edge[x]);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = none;
    for (std::size_t q = 0; q < path.size(); q += 2) {
      const double mass = basis[path[q]].mass;
      if (mass < theta || (mass == theta && path[q] < leave)) {
        theta = mass;
        leave = path[q];
      }
    }
    for (std::size_t q = 0; q < path.size(); ++q) {
      double& mass = basis[path[q]].mass;
      mass = (q % 2 == 0) ? std::max(0.0, mass - theta) : mass + theta;
    }
    degenerate_run = theta <= 1e-300 ? degenerate_run + 1 : 0;

    unlink(basis[leave].row, leave);
    unlink(n + basis[leave].col, leave);
    basis[leave] = {ei, ej, theta};
    adj[ei].push_back({n + ej, leave});
    adj[n + ej].push_back({ei, leave});
  }

  for (const auto& b : basis) {
    plan.cost += b.mass * c(b.row, b.col);
    if (b.mass > 0.0) plan.cells.push_back({b.row, b.col, b.mass});
  }
  return plan;
}

}  // namespace stablemv
