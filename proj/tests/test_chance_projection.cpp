#include <cmath>

#include <gtest/gtest.h>

#include "corl/chance_projection.hpp"
#include "oracles.hpp"

using namespace corl;

namespace {
const NoiseModel kNoise;
const ControlBounds kBounds;
const SafetyLevels kLevels;

ProjectionResult run(const GaussianControl& g, const std::vector<HalfPlaneConstraint>& cs,
                     const SafetyLevels& lv = kLevels) {
  return project(g, kNoise, cs, kBounds, lv);
}
}  // namespace

TEST(ViolationProbability, Examples) {
  const HalfPlaneConstraint c{{1.0, 0.0}, 0.5};
  EXPECT_DOUBLE_EQ(violation_probability({{0.5, 0.0}, {0.1, 0.2}}, c), 0.5);
  EXPECT_EQ(violation_probability({{0.2, 0.0}, {0.0, 0.0}}, c), 0.0);
  EXPECT_EQ(violation_probability({{0.7, 0.0}, {0.0, 0.0}}, c), 1.0);
  EXPECT_NEAR(violation_probability({{0.5 - 0.1 * 1.6448536269514722, 0.0}, {0.1, 0.2}}, c), 0.05, 1e-12);
}

TEST(Project, NoConstraintsFeasibleNominalIsExact) {
  const GaussianControl g{{0.3, -0.4}, {0.1, 0.2}};
  const auto r = run(g, {});
  EXPECT_EQ(r.status, ProjectionStatus::exact);
  EXPECT_EQ(r.adjusted, g);
  EXPECT_LE(r.max_violation, 1e-8);
}

TEST(Project, BoundRowsShrinkSpreadAtTheEdge) {
  const GaussianControl g{{1.0, 0.0}, {0.1, 0.2}};
  const auto r = run(g, {});
  EXPECT_NE(r.status, ProjectionStatus::infeasible_fallback);
  const double z = inv_normal_cdf(kLevels.delta_u);
  EXPECT_LE(r.adjusted.mean.v + z * r.adjusted.std[0], kBounds.v_max + 1e-9);
}

TEST(Project, SingleConstraintMatchesGridOracle) {
  const GaussianControl g{{0.8, 0.0}, {0.1, 0.2}};
  const std::vector<HalfPlaneConstraint> cs{{{1.0, 0.0}, 0.3}};
  const auto r = run(g, cs);
  ASSERT_NE(r.status, ProjectionStatus::infeasible_fallback);
  const double grid = oracle::grid_objective_v(g, cs, kNoise, kBounds, kLevels);
  EXPECT_NEAR(oracle::l1_objective(r.adjusted, g), grid, 1e-3);
  EXPECT_LE(oracle::l1_objective(r.adjusted, g), grid + 1e-9);
  EXPECT_LE(violation_probability(r.adjusted, cs[0]), 0.05 + 1e-9);
}

TEST(Project, ContradictoryConstraintsFallBackSymmetrically) {
  const GaussianControl g{{0.4, 0.3}, {0.1, 0.2}};
  const std::vector<HalfPlaneConstraint> cs{{{1.0, 0.0}, -2.0}, {{-1.0, 0.0}, -2.0}};
  const auto r = run(g, cs);
  EXPECT_EQ(r.status, ProjectionStatus::infeasible_fallback);
  // the second stage may use the 1e-9 * (1 + t) slack on the minimax cap
  EXPECT_NEAR(r.adjusted.mean.v, 0.0, 1e-8);
  EXPECT_EQ(r.adjusted.std[0], 0.0);
  EXPECT_EQ(r.adjusted.std[1], 0.0);
  EXPECT_GT(r.max_violation, 0.0);
}

TEST(Project, RandomInstancesMatchGridOracle) {
  NormalSampler g(RngStream(31));
  int compared = 0;
  while (compared < 6) {
    const auto inst = oracle::random_projection_instance(g, 3);
    const auto r = run(inst.nominal, inst.constraints);
    if (r.status == ProjectionStatus::infeasible_fallback) continue;
    EXPECT_NEAR(r.adjusted.mean.w, inst.nominal.mean.w, 1e-12);
    EXPECT_NEAR(r.adjusted.std[1], inst.nominal.std[1], 1e-12);
    const double grid = oracle::grid_objective_v(inst.nominal, inst.constraints, kNoise, kBounds, kLevels, 801);
    const double obj = oracle::l1_objective(r.adjusted, inst.nominal);
    EXPECT_LE(obj, grid + 1e-9);
    EXPECT_NEAR(obj, grid, 5e-3);  // coarser grid than the acceptance run
    ++compared;
  }
}

TEST(Project, OutputSatisfiesEveryChanceConstraint) {
  NormalSampler g(RngStream(32));
  for (int trial = 0; trial < 500; ++trial) {
    const auto inst = oracle::random_projection_instance(g, 4);
    const auto r = run(inst.nominal, inst.constraints);
    if (r.status == ProjectionStatus::infeasible_fallback) continue;
    for (const auto& c : inst.constraints) EXPECT_LE(violation_probability(r.adjusted, c), 0.05 + 1e-9);
    const double z_nu = inv_normal_cdf(kLevels.delta_nu);
    for (const auto& c : inst.constraints) {
      // execution-noise margin is honoured for the mean as well
      EXPECT_LE(c.a[0] * r.adjusted.mean.v, c.b - z_nu * std::abs(c.a[0]) * kNoise.sigma_v + 1e-9);
    }
    EXPECT_LE(r.max_violation, 1e-8);
  }
}

TEST(Project, Idempotent) {
  NormalSampler g(RngStream(33));
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_projection_instance(g, 4);
    const auto r1 = run(inst.nominal, inst.constraints);
    if (r1.status == ProjectionStatus::infeasible_fallback) continue;
    const auto r2 = run(r1.adjusted, inst.constraints);
    EXPECT_NEAR(r2.adjusted.mean.v, r1.adjusted.mean.v, 1e-9);
    EXPECT_NEAR(r2.adjusted.mean.w, r1.adjusted.mean.w, 1e-9);
    EXPECT_NEAR(r2.adjusted.std[0], r1.adjusted.std[0], 1e-9);
    EXPECT_NEAR(r2.adjusted.std[1], r1.adjusted.std[1], 1e-9);
  }
}

TEST(Project, TighterLevelNeverRaisesViolation) {
  NormalSampler g(RngStream(34));
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = oracle::random_projection_instance(g, 3);
    SafetyLevels loose, tight;
    loose.delta_u = 0.9;
    tight.delta_u = 0.99;
    const auto a = run(inst.nominal, inst.constraints, loose);
    const auto b = run(inst.nominal, inst.constraints, tight);
    if (a.status == ProjectionStatus::infeasible_fallback || b.status == ProjectionStatus::infeasible_fallback)
      continue;
    for (const auto& c : inst.constraints)
      EXPECT_LE(violation_probability(b.adjusted, c), violation_probability(a.adjusted, c) + 1e-12);
  }
}

TEST(Project, BoundClampingIsRare) {
  NormalSampler g(RngStream(35));
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = oracle::random_projection_instance(g, 2);
    const auto r = run(inst.nominal, inst.constraints);
    if (r.status == ProjectionStatus::infeasible_fallback) continue;
    for (int k = 0; k < 2; ++k) {
      const double m = k == 0 ? r.adjusted.mean.v : r.adjusted.mean.w;
      const double s = r.adjusted.std[static_cast<std::size_t>(k)];
      if (s == 0.0) continue;
      const double p_out = normal_cdf((kBounds.lo(k) - m) / s) + (1.0 - normal_cdf((kBounds.hi(k) - m) / s));
      EXPECT_LE(p_out, 2 * (1 - kLevels.delta_u) + 1e-9);
    }
  }
}

TEST(Project, StatusReflectsSpreadChange) {
  // mean must move but spread can stay
  const GaussianControl g{{0.8, 0.0}, {0.1, 0.2}};
  const auto r = run(g, {{{1.0, 0.0}, 0.6}});
  ASSERT_NE(r.status, ProjectionStatus::infeasible_fallback);
  if (r.adjusted.std == g.std) EXPECT_EQ(r.status, ProjectionStatus::exact);
  else EXPECT_EQ(r.status, ProjectionStatus::relaxed_variance);
}
