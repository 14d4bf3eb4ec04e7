#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "corl/rng.hpp"
#include "corl/simplex.hpp"

using namespace corl;
using Sense = LinearProgram::Sense;

TEST(DenseSimplex, TextbookMaximization) {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
  LinearProgram lp(2);
  lp.set_cost(0, -3);
  lp.set_cost(1, -5);
  lp.add_row({1, 0}, Sense::le, 4);
  lp.add_row({0, 2}, Sense::le, 12);
  lp.add_row({3, 2}, Sense::le, 18);
  const auto s = DenseSimplex().solve(lp);
  ASSERT_EQ(s.status, LpSolution::Status::optimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
  EXPECT_NEAR(s.x[1], 6.0, 1e-12);
  EXPECT_NEAR(s.objective, -36.0, 1e-12);
}

TEST(DenseSimplex, EqualityAndGreaterRows) {
  // min x + 2y s.t. x + y = 3, x >= 1, y >= 0.5 -> (2.5, 0.5), 3.5
  LinearProgram lp(2);
  lp.set_cost(0, 1);
  lp.set_cost(1, 2);
  lp.add_row({1, 1}, Sense::eq, 3);
  lp.add_row({1, 0}, Sense::ge, 1);
  lp.add_row({0, 1}, Sense::ge, 0.5);
  const auto s = DenseSimplex().solve(lp);
  ASSERT_EQ(s.status, LpSolution::Status::optimal);
  EXPECT_NEAR(s.x[0], 2.5, 1e-12);
  EXPECT_NEAR(s.x[1], 0.5, 1e-12);
}

TEST(DenseSimplex, NegativeRhsIsNormalized) {
  // -x <= -2  <=>  x >= 2
  LinearProgram lp(1);
  lp.set_cost(0, 1);
  lp.add_row({-1}, Sense::le, -2);
  const auto s = DenseSimplex().solve(lp);
  ASSERT_EQ(s.status, LpSolution::Status::optimal);
  EXPECT_NEAR(s.x[0], 2.0, 1e-12);
}

TEST(DenseSimplex, DetectsInfeasible) {
  LinearProgram lp(1);
  lp.add_row({1}, Sense::le, 1);
  lp.add_row({1}, Sense::ge, 2);
  EXPECT_EQ(DenseSimplex().solve(lp).status, LpSolution::Status::infeasible);
}

TEST(DenseSimplex, DetectsUnbounded) {
  LinearProgram lp(2);
  lp.set_cost(0, -1);
  lp.add_row({1, -1}, Sense::le, 1);
  EXPECT_EQ(DenseSimplex().solve(lp).status, LpSolution::Status::unbounded);
}

TEST(DenseSimplex, DegenerateCyclingExample) {
  // Beale's classic cycling instance; Bland's rule must terminate.
  LinearProgram lp(4);
  lp.set_cost(0, -0.75);
  lp.set_cost(1, 150);
  lp.set_cost(2, -0.02);
  lp.set_cost(3, 6);
  lp.add_row({0.25, -60, -0.04, 9}, Sense::le, 0);
  lp.add_row({0.5, -90, -0.02, 3}, Sense::le, 0);
  lp.add_row({0, 0, 1, 0}, Sense::le, 1);
  const auto s = DenseSimplex().solve(lp);
  ASSERT_EQ(s.status, LpSolution::Status::optimal);
  EXPECT_NEAR(s.objective, -0.05, 1e-12);
}

TEST(DenseSimplex, RowWidthChecked) {
  LinearProgram lp(2);
  EXPECT_THROW(lp.add_row({1}, Sense::le, 0), std::invalid_argument);
}

// Random 2-variable LPs against vertex enumeration.
TEST(DenseSimplex, MatchesVertexEnumerationOnRandom2D) {
  NormalSampler g(RngStream(11));
  for (int trial = 0; trial < 300; ++trial) {
    LinearProgram lp(2);
    const double c0 = g(), c1 = g();
    lp.set_cost(0, c0);
    lp.set_cost(1, c1);
    std::vector<std::array<double, 3>> rows;  // a0 x + a1 y <= b
    for (int i = 0; i < 5; ++i) {
      const double a0 = g(), a1 = g(), b = 1.0 + std::abs(g());
      lp.add_row({a0, a1}, Sense::le, b);
      rows.push_back({a0, a1, b});
    }
    rows.push_back({1, 0, 10});  // box keeps the oracle finite
    rows.push_back({0, 1, 10});
    lp.add_row({1, 0}, Sense::le, 10);
    lp.add_row({0, 1}, Sense::le, 10);
    rows.push_back({-1, 0, 0});
    rows.push_back({0, -1, 0});

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        const double d = rows[i][0] * rows[j][1] - rows[i][1] * rows[j][0];
        if (std::abs(d) < 1e-12) continue;
        const double x = (rows[i][2] * rows[j][1] - rows[i][1] * rows[j][2]) / d;
        const double y = (rows[i][0] * rows[j][2] - rows[i][2] * rows[j][0]) / d;
        bool ok = true;
        for (const auto& r : rows) ok = ok && r[0] * x + r[1] * y <= r[2] + 1e-9;
        if (ok) best = std::min(best, c0 * x + c1 * y);
      }
    }
    const auto s = DenseSimplex().solve(lp);
    ASSERT_EQ(s.status, LpSolution::Status::optimal) << trial;
    EXPECT_NEAR(s.objective, best, 1e-8) << trial;
  }
}
