#include <gtest/gtest.h>

#include <optional>
#include <random>

#include "persuasion/simplex.hpp"

using namespace persuasion;

namespace {

// Solve a square system exactly; nullopt when singular.
std::optional<Vec> solve_square(std::vector<Vec> a, Vec b) {
  std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      Rational f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Brute force over every choice of n tight constraints among rows and x >= 0.
std::optional<Rational> vertex_oracle(const std::vector<Vec>& a, const Vec& b, const Vec& c) {
  std::size_t n = c.size(), m = a.size();
  std::vector<Vec> rows = a;
  Vec rhs = b;
  for (std::size_t i = 0; i < n; ++i) {
    Vec e(n, Rational(0));
    e[i] = -1;
    rows.push_back(e);
    rhs.push_back(0);
  }
  std::optional<Rational> best;
  std::size_t total = m + n;
  for (std::uint64_t mask = 0; mask < (1ull << total); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
    std::vector<Vec> sa;
    Vec sb;
    for (std::size_t i = 0; i < total; ++i)
      if (mask >> i & 1) {
        sa.push_back(rows[i]);
        sb.push_back(rhs[i]);
      }
    auto x = solve_square(sa, sb);
    if (!x) continue;
    bool ok = true;
    for (std::size_t i = 0; i < total && ok; ++i) ok = dot(rows[i], *x) <= rhs[i];
    if (!ok) continue;
    Rational v = dot(c, *x);
    if (!best || v > *best) best = v;
  }
  return best;
}

}  // namespace

TEST(Simplex, TextbookMaximum) {
  LinearProgram lp(2);
  lp.objective = {3, 5};
  lp.add({1, 0}, Sense::LessEq, 4);
  lp.add({0, 2}, Sense::LessEq, 12);
  lp.add({3, 2}, Sense::LessEq, 18);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_EQ(r.value, 36);
  EXPECT_EQ(r.x, (Vec{2, 6}));
}

TEST(Simplex, EqualityAndLowerBoundRows) {
  // max x + 2y with x + y = 1, x >= 1/3: optimum at x = 1/3.
  LinearProgram lp(2);
  lp.objective = {1, 2};
  lp.add({1, 1}, Sense::Equal, 1);
  lp.add({1, 0}, Sense::GreaterEq, frac(1, 3));
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_EQ(r.value, frac(5, 3));
  EXPECT_EQ(r.x, (Vec{frac(1, 3), frac(2, 3)}));
}

TEST(Simplex, NegativeRightHandSide) {
  // -x <= -2 means x >= 2; minimize x by maximizing -x.
  LinearProgram lp(1);
  lp.objective = {-1};
  lp.add({-1}, Sense::LessEq, -2);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_EQ(r.value, -2);
}

TEST(Simplex, DetectsInfeasibility) {
  LinearProgram lp(1);
  lp.objective = {1};
  lp.add({1}, Sense::GreaterEq, 2);
  lp.add({1}, Sense::LessEq, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::Infeasible);
}

TEST(Simplex, DetectsUnboundedness) {
  LinearProgram lp(2);
  lp.objective = {1, 0};
  lp.add({1, -1}, Sense::LessEq, 1);
  EXPECT_EQ(solve_lp(lp).status, LpStatus::Unbounded);
}

TEST(Simplex, TerminatesOnClassicCyclingInstance) {
  // Degenerate instance on which the largest-coefficient rule cycles; the smallest-index rule must not.
  LinearProgram lp(4);
  lp.objective = {frac(3, 4), -20, frac(1, 2), -6};
  lp.add({frac(1, 4), -8, -1, 9}, Sense::LessEq, 0);
  lp.add({frac(1, 2), -12, frac(-1, 2), 3}, Sense::LessEq, 0);
  lp.add({0, 0, 1, 0}, Sense::LessEq, 1);
  auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_EQ(r.value, frac(5, 4));
}

TEST(Simplex, OptimalFaceVertices) {
  LinearProgram lp(2);
  lp.objective = {1, 1};
  lp.add({1, 1}, Sense::LessEq, 1);
  auto en = optimal_vertices(lp);
  ASSERT_EQ(en.status, LpStatus::Optimal);
  EXPECT_TRUE(en.complete);
  EXPECT_EQ(en.value, 1);
  EXPECT_EQ(en.vertices, (std::vector<Vec>{{0, 1}, {1, 0}}));
}

TEST(Simplex, MatchesBruteForceVerticesOnRandomPrograms) {
  std::mt19937_64 rng(20261017);
  std::uniform_int_distribution<long> coef(-6, 6), rhs(-3, 12);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 2 + trial % 2, m = 2 + trial % 3;
    std::vector<Vec> a;
    Vec b, c(n);
    for (auto& x : c) x = Rational(coef(rng));
    for (std::size_t i = 0; i < m; ++i) {
      Vec row(n);
      for (auto& x : row) x = Rational(coef(rng));
      a.push_back(row);
      b.push_back(Rational(rhs(rng)));
    }
    for (std::size_t i = 0; i < n; ++i) {  // box keeps the oracle's vertex search exhaustive
      Vec e(n, Rational(0));
      e[i] = 1;
      a.push_back(e);
      b.push_back(10);
    }
    LinearProgram lp(n);
    lp.objective = c;
    for (std::size_t i = 0; i < a.size(); ++i) lp.add(a[i], Sense::LessEq, b[i]);
    auto r = solve_lp(lp);
    auto oracle = vertex_oracle(a, b, c);
    if (!oracle) {
      EXPECT_EQ(r.status, LpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ++feasible;
    ASSERT_EQ(r.status, LpStatus::Optimal) << "trial " << trial;
    EXPECT_EQ(r.value, *oracle) << "trial " << trial;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(dot(a[i], r.x), b[i]);
  }
  EXPECT_GT(feasible, 100);
}
