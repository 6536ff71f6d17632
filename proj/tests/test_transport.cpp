#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "stablemv/rng.hpp"
#include "stablemv/transport.hpp"

using namespace stablemv;

namespace {

CostMatrix random_costs(std::size_t n, std::size_t m, RandomSource& src) {
  CostMatrix c(n, m);
  for (double& v : c.data) v = src.uniform_open();
  return c;
}

double brute_force_assignment(const CostMatrix& c) {
  std::vector<std::size_t> perm(c.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < c.rows; ++i) s += c(i, perm[i]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(Assignment, MatchesBruteForce) {
  RandomSource src = RngStream(1).source();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const auto c = random_costs(n, n, src);
    const auto a = solve_assignment(c);
    double s = 0.0;
    std::vector<char> used(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      s += c(i, a[i]);
      EXPECT_FALSE(used[a[i]]);
      used[a[i]] = 1;
    }
    EXPECT_NEAR(s, brute_force_assignment(c), 1e-12);
  }
}

TEST(Transport, EqualWeightsMatchAssignment) {
  RandomSource src = RngStream(2).source();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + trial % 30;
    const auto c = random_costs(n, n, src);
    const auto a = solve_assignment(c);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += c(i, a[i]);
    const std::vector<double> w(n, 1.0);
    EXPECT_NEAR(solve_transport(w, w, c).cost, s / static_cast<double>(n), 1e-12);
  }
}

// Rational weights k_i / D split into unit atoms turn the transport problem
// into an assignment problem on D x D atoms.
TEST(Transport, RationalWeightsMatchAtomSplitting) {
  RandomSource src = RngStream(3).source();
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t D = 3 + trial % 5;
    auto random_composition = [&](std::size_t parts) {
      std::vector<std::size_t> k(parts, 1);
      for (std::size_t r = parts; r < D; ++r) ++k[src.index(parts)];
      return k;
    };
    const std::size_t n = 1 + src.index(std::min<std::size_t>(D, 4));
    const std::size_t m = 1 + src.index(std::min<std::size_t>(D, 4));
    const auto ka = random_composition(n), kb = random_composition(m);
    const auto c = random_costs(n, m, src);
    std::vector<std::size_t> ra, rb;
    for (std::size_t i = 0; i < n; ++i) ra.insert(ra.end(), ka[i], i);
    for (std::size_t j = 0; j < m; ++j) rb.insert(rb.end(), kb[j], j);
    CostMatrix big(D, D);
    for (std::size_t p = 0; p < D; ++p)
      for (std::size_t q = 0; q < D; ++q) big(p, q) = c(ra[p], rb[q]);
    const double oracle = brute_force_assignment(big) / static_cast<double>(D);
    std::vector<double> a(ka.begin(), ka.end()), b(kb.begin(), kb.end());
    const auto plan = solve_transport(a, b, c);
    EXPECT_NEAR(plan.cost, oracle, 1e-12);
    // plan marginals
    std::vector<double> rs(n, 0.0), cs(m, 0.0);
    for (const auto& cell : plan.cells) {
      rs[cell.row] += cell.mass;
      cs[cell.col] += cell.mass;
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(rs[i], a[i] / static_cast<double>(D), 1e-12);
    for (std::size_t j = 0; j < m; ++j) EXPECT_NEAR(cs[j], b[j] / static_cast<double>(D), 1e-12);
  }
}

TEST(Transport, DegenerateMarginalsAndZeroWeights) {
  CostMatrix c(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) c(i, j) = std::abs(double(i) - double(j));
  const std::vector<double> a{0.5, 0.0, 0.5}, b{0.5, 0.0, 0.5};
  EXPECT_NEAR(solve_transport(a, b, c).cost, 0.0, 1e-15);
  EXPECT_THROW(solve_transport(std::vector<double>{-1.0, 2.0}, b, c), InvalidArgument);
  EXPECT_THROW(solve_transport(std::vector<double>{0.0, 0.0, 0.0}, b, c), InvalidArgument);
}

TEST(Transport, LargerInstancesBeatProductCoupling) {
  RandomSource src = RngStream(4).source();
  const std::size_t n = 40, m = 55;
  const auto c = random_costs(n, m, src);
  std::vector<double> a(n), b(m);
  for (double& v : a) v = src.uniform_open();
  for (double& v : b) v = src.uniform_open();
  const auto plan = solve_transport(a, b, c);
  const double sa = std::accumulate(a.begin(), a.end(), 0.0), sb = std::accumulate(b.begin(), b.end(), 0.0);
  double product = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) product += a[i] / sa * b[j] / sb * c(i, j);
  EXPECT_LE(plan.cost, product);
  EXPECT_GT(plan.cost, 0.0);
}
