#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "corl/dynamics.hpp"

using namespace corl;

namespace {
AgentState at(double x, double y, double th) {
  AgentState s;
  s.px = x;
  s.py = y;
  s.theta = th;
  return s;
}
}  // namespace

TEST(Step, StraightLine) {
  const auto s = step(at(0, 0, 0), {1.0, 0.0}, 0.1);
  EXPECT_DOUBLE_EQ(s.px, 0.1);
  EXPECT_DOUBLE_EQ(s.py, 0.0);
  EXPECT_DOUBLE_EQ(s.theta, 0.0);
  EXPECT_DOUBLE_EQ(s.vx, 1.0);
  EXPECT_DOUBLE_EQ(s.vy, 0.0);
}

TEST(Step, RotatedHeading) {
  const auto s = step(at(0, 0, std::numbers::pi / 2), {1.0, 0.0}, 0.1);
  EXPECT_NEAR(s.px, 0.0, 1e-16);
  EXPECT_DOUBLE_EQ(s.py, 0.1);
  EXPECT_DOUBLE_EQ(s.theta, std::numbers::pi / 2);
}

TEST(Step, PositionUsesHeadingBeforeTurn) {
  const auto s = step(at(0, 0, 0), {0.5, 2.0}, 0.1);
  EXPECT_DOUBLE_EQ(s.px, 0.05);
  EXPECT_DOUBLE_EQ(s.py, 0.0);
  EXPECT_DOUBLE_EQ(s.theta, 0.2);
}

TEST(Step, ZeroControlIsIdentity) {
  const auto s0 = at(1.5, -2.0, 2.9);
  const auto s = step(s0, {0.0, 0.0}, 0.1);
  EXPECT_EQ(s.px, s0.px);
  EXPECT_EQ(s.py, s0.py);
  EXPECT_EQ(s.theta, s0.theta);
}

TEST(Step, MatchesAffineFormExactly) {
  NormalSampler g(RngStream(1));
  for (int i = 0; i < 1000; ++i) {
    const auto s = at(10 * g(), 10 * g(), wrap_angle(4 * g()));
    const ControlInput u{g(), 2 * g()};
    const auto a = affine_terms(s, 0.1).apply(u);
    const auto b = step(s, u, 0.1);
    EXPECT_EQ(a[0], b.px);
    EXPECT_EQ(a[1], b.py);
    EXPECT_EQ(wrap_angle(a[2]), b.theta);
    EXPECT_GT(b.theta, -std::numbers::pi);
    EXPECT_LE(b.theta, std::numbers::pi);
  }
}

TEST(Step, RealizedVelocityBoundedBySpeed) {
  const ControlBounds bounds;
  NormalSampler g(RngStream(2));
  for (int i = 0; i < 1000; ++i) {
    const auto u = bounds.clamp({3 * g(), 3 * g()});
    const auto s = step(at(g(), g(), g()), u, 0.1);
    EXPECT_LE(std::hypot(s.vx, s.vy), bounds.v_max + 1e-12);
  }
}

TEST(PerturbAndClamp, OneSidedClampBiasesMeanDown) {
  const NoiseModel noise;
  const ControlBounds bounds;
  NormalSampler g(RngStream(3));
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto u = perturb_and_clamp({1.0, 0.0}, noise, bounds, g);
    ASSERT_LE(u.v, bounds.v_max);
    ASSERT_GE(u.w, bounds.w_min);
    ASSERT_LE(u.w, bounds.w_max);
    sum += u.v;
  }
  const double mean = sum / n;
  EXPECT_LT(mean, 1.0);
  // E[min(1 + e, 1)] = 1 - sigma / sqrt(2 pi)
  EXPECT_NEAR(mean, 1.0 - 0.1 / std::sqrt(2 * std::numbers::pi), 5 * 0.06 / std::sqrt(n));
}

TEST(PerturbAndClamp, FarOutsideBoundsSaturates) {
  const NoiseModel noise;
  const ControlBounds bounds;
  NormalSampler g(RngStream(4));
  int saturated = 0;
  for (int i = 0; i < 10000; ++i) saturated += perturb_and_clamp({2.0, 0.0}, noise, bounds, g).v == 1.0;
  EXPECT_EQ(saturated, 10000);
}

TEST(ControlBounds, RejectsInvertedRanges) {
  ControlBounds b;
  b.v_min = 1.0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  NoiseModel n;
  n.sigma_w = 0.0;
  EXPECT_THROW(n.validate(), std::invalid_argument);
}
