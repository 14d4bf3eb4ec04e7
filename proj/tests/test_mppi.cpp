#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "corl/mppi.hpp"

using namespace corl;

namespace {
const NoiseModel kNoise;
const ControlBounds kBounds;

DistributionSequence constant_dist(int h, ControlInput mean, double sv, double sw) {
  return DistributionSequence(static_cast<std::size_t>(h), GaussianControl{mean, {sv, sw}});
}

Rollout straight_rollout(const AgentState& start, const ControlSequence& u, double dt = 0.1) {
  Rollout r;
  r.controls = u;
  r.noise.assign(u.size(), Vec2{});
  r.states.push_back(start);
  for (const auto& c : u) r.states.push_back(step(r.states.back(), c, dt));
  return r;
}
}  // namespace

TEST(SampleRollouts, ZeroSpreadReproducesMean) {
  const auto dist = constant_dist(5, {0.5, 0.1}, 0.0, 0.0);
  const auto rs = sample_rollouts(dist, 4, AgentState{}, kBounds, 0.1, RngStream(1), Branch::mppi);
  ASSERT_EQ(rs.size(), 4u);
  for (const auto& r : rs) {
    for (std::size_t t = 0; t < 5; ++t) {
      EXPECT_EQ(r.controls[t], (ControlInput{0.5, 0.1}));
      EXPECT_EQ(r.noise[t], Vec2{});
    }
  }
  EXPECT_TRUE(sample_rollouts(dist, 0, AgentState{}, kBounds, 0.1, RngStream(1), Branch::mppi).empty());
}

TEST(SampleRollouts, ClampsAndRecordsPostClampNoise) {
  const auto dist = constant_dist(3, {1.0, 0.0}, 0.1, 0.2);
  const auto rs = sample_rollouts(dist, 20000, AgentState{}, kBounds, 0.1, RngStream(2), Branch::mppi);
  double sum = 0.0;
  for (const auto& r : rs) {
    for (std::size_t t = 0; t < 3; ++t) {
      ASSERT_LE(r.controls[t].v, kBounds.v_max);
      EXPECT_EQ(r.noise[t].x, r.controls[t].v - 1.0);
      sum += r.controls[t].v;
    }
  }
  EXPECT_LT(sum / (3.0 * rs.size()), 1.0);
}

TEST(SampleRollouts, StatesReplayFromControls) {
  const auto dist = constant_dist(8, {0.3, 0.5}, 0.1, 0.2);
  AgentState start;
  start.px = 1.0;
  start.theta = 0.4;
  for (const auto& r : sample_rollouts(dist, 50, start, kBounds, 0.1, RngStream(3), Branch::policy)) {
    const auto replay = straight_rollout(start, r.controls);
    ASSERT_EQ(replay.states.size(), r.states.size());
    for (std::size_t t = 0; t < r.states.size(); ++t) EXPECT_EQ(replay.states[t], r.states[t]);
    EXPECT_EQ(r.branch, Branch::policy);
  }
}

TEST(SampleRollouts, SubsetRegeneratesIdentically) {
  const auto dist = constant_dist(6, {0.2, -0.3}, 0.1, 0.2);
  const auto all = sample_rollouts(dist, 30, AgentState{}, kBounds, 0.1, RngStream(4), Branch::mppi);
  const auto tail = sample_rollouts(dist, 10, AgentState{}, kBounds, 0.1, RngStream(4), Branch::mppi, 20);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(tail[i].controls, all[20 + i].controls);
}

TEST(RolloutCost, AtGoalWithZeroControlIsZero) {
  CostContext ctx;
  ctx.goal = {0.0, 0.0};
  const auto r = straight_rollout(AgentState{}, ControlSequence(10, ControlInput{}));
  const auto dist = constant_dist(10, {}, kNoise.sigma_v, kNoise.sigma_w);
  EXPECT_EQ(rollout_cost(r, dist, ctx, MppiParams{}, kNoise), 0.0);
}

TEST(RolloutCost, DecreasesAsTerminalApproachesGoal) {
  CostContext ctx;
  ctx.goal = {1.0, 0.0};
  const auto dist = constant_dist(10, {}, kNoise.sigma_v, kNoise.sigma_w);
  const auto at_goal_ctx = [] {
    CostContext c;
    c.goal = {0.0, 0.0};
    return c;
  }();
  const double at_goal =
      rollout_cost(straight_rollout(AgentState{}, ControlSequence(10, ControlInput{})), dist, at_goal_ctx, {}, kNoise);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 10; ++i) {
    // travel i/10 m towards the goal; ū = ε = 0 except for speed
    const double v = 0.1 * i;
    auto r = straight_rollout(AgentState{}, ControlSequence(10, ControlInput{v, 0.0}));
    r.noise.assign(10, Vec2{});
    const double c = rollout_cost(r, constant_dist(10, {v, 0.0}, kNoise.sigma_v, kNoise.sigma_w), ctx, {}, kNoise);
    EXPECT_GT(c, at_goal);
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(RolloutCost, CollisionTermIsDifferential) {
  CostContext with, without;
  with.goal = without.goal = {5.0, 0.0};
  const auto r = straight_rollout(AgentState{}, ControlSequence(10, ControlInput{1.0, 0.0}));
  const auto dist = constant_dist(10, {1.0, 0.0}, kNoise.sigma_v, kNoise.sigma_w);
  // neighbour parked at x = 0.5: collides on the steps where |x - 0.5| < 0.6
  with.neighbor_positions.assign(11, {Vec2{0.5, 0.0}});
  with.neighbor_radii = {0.3};
  without.neighbor_positions.assign(11, {});
  const double c_with = rollout_cost(r, dist, with, {}, kNoise);
  const double c_without = rollout_cost(r, dist, without, {}, kNoise);
  int colliding = 0;
  double proximity = 0.0;
  for (int t = 1; t <= 10; ++t) {
    const double d = std::abs(r.states[static_cast<std::size_t>(t)].px - 0.5);
    colliding += d < 0.6;
    proximity += 0.5 / std::max(d, 0.05);
  }
  EXPECT_NEAR(c_with - c_without, 1000.0 * colliding + proximity, 1e-9);
}

TEST(RolloutCost, PreparedCandidatesGiveSameCost) {
  NormalSampler g(RngStream(8));
  CostContext ctx;
  ctx.goal = {3.0, 1.0};
  for (int t = 0; t <= 10; ++t) {
    std::vector<Vec2> row;
    for (int j = 0; j < 12; ++j) row.push_back({-6.0 + j + 0.05 * t, 0.4 * (j % 3) - 0.3});
    ctx.neighbor_positions.push_back(row);
  }
  ctx.neighbor_radii.assign(12, 0.3);
  CostContext prepared = ctx;
  prepared.prepare({0.0, 0.0}, 1.0, 0.1);
  const auto dist = constant_dist(10, {0.5, 0.2}, 0.3, 0.6);
  for (const auto& r : sample_rollouts(dist, 200, AgentState{}, kBounds, 0.1, RngStream(9), Branch::mppi))
    EXPECT_EQ(rollout_cost(r, dist, ctx, {}, kNoise), rollout_cost(r, dist, prepared, {}, kNoise));
}

TEST(RolloutCost, NegativeVelocityPenalty) {
  CostContext ctx;
  ctx.goal = {0.0, 0.0};
  MppiParams p;
  p.gamma = 0.0;
  auto r = straight_rollout(AgentState{}, ControlSequence(1, ControlInput{-0.5, 0.0}));
  const auto dist = constant_dist(1, {-0.5, 0.0}, kNoise.sigma_v, kNoise.sigma_w);
  // running goal 0.05 + terminal 10 * 0.05 + penalty 5 * 0.5
  EXPECT_NEAR(rollout_cost(r, dist, ctx, p, kNoise), 0.05 + 0.5 + 2.5, 1e-12);
}

TEST(Weights, ClosedForms) {
  const std::vector<double> equal(7, 3.0);
  for (double w : weights(equal, 0.5)) EXPECT_NEAR(w, 1.0 / 7, 1e-15);
  const double lambda = 0.37;
  const std::vector<double> two{0.0, lambda * std::log(2.0)};
  const auto w = weights(two, lambda);
  EXPECT_NEAR(w[0], 2.0 / 3, 1e-12);
  EXPECT_NEAR(w[1], 1.0 / 3, 1e-12);
  const auto sharp = weights(std::vector<double>{1.0, 1.001, 2.0}, 1e-6);
  EXPECT_NEAR(sharp[0], 1.0, 1e-12);
}

TEST(Weights, ShiftInvariantAndStable) {
  NormalSampler g(RngStream(10));
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> c(50), shifted(50);
    const double lambda = 0.01 + g.uniform();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = 1e6 * lambda * g.uniform();
    const double k = 1e3 * g();
    for (std::size_t i = 0; i < c.size(); ++i) shifted[i] = c[i] + k;
    const auto a = weights(c, lambda), b = weights(shifted, lambda);
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ASSERT_TRUE(std::isfinite(a[i]));
      ASSERT_GE(a[i], 0.0);
      EXPECT_NEAR(a[i], b[i], 1e-12);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  EXPECT_THROW(weights(std::vector<double>{}, 1.0), std::invalid_argument);
}

TEST(WeightedUpdate, Averages) {
  const auto r1 = straight_rollout(AgentState{}, {{1.0, 0.0}, {0.0, 1.0}});
  const auto r2 = straight_rollout(AgentState{}, {{0.0, 1.0}, {1.0, 0.0}});
  const std::vector<Rollout> rs{r1, r2};
  const auto u = weighted_update(rs, std::vector<double>{0.25, 0.75}, kBounds);
  EXPECT_DOUBLE_EQ(u[0].v, 0.25);
  EXPECT_DOUBLE_EQ(u[0].w, 0.75);
  EXPECT_DOUBLE_EQ(u[1].v, 0.75);
  const std::vector<Rollout> one{r1};
  EXPECT_EQ(weighted_update(one, std::vector<double>{1.0}, kBounds), r1.controls);
  const std::vector<Rollout> same{r1, r1};
  EXPECT_EQ(weighted_update(same, std::vector<double>{0.3, 0.7}, kBounds), r1.controls);
}

TEST(WeightedUpdate, ZeroSpreadSingleBranchReturnsNominal) {
  ControlSequence nominal{{0.2, 0.1}, {0.4, -0.3}, {0.6, 0.0}};
  DistributionSequence dist;
  for (const auto& u : nominal) dist.push_back({u, {0.0, 0.0}});
  const auto rs = sample_rollouts(dist, 25, AgentState{}, kBounds, 0.1, RngStream(5), Branch::mppi);
  std::vector<double> costs(25);
  std::iota(costs.begin(), costs.end(), 0.0);
  const auto u = weighted_update(rs, weights(costs, 1.0), kBounds);
  ASSERT_EQ(u.size(), nominal.size());
  // the weights sum to 1 only up to rounding
  for (std::size_t t = 0; t < u.size(); ++t) {
    EXPECT_NEAR(u[t].v, nominal[t].v, 1e-15);
    EXPECT_NEAR(u[t].w, nominal[t].w, 1e-15);
  }
}

TEST(Shift, RepeatsLast) {
  const ControlSequence ramp{{1, 0}, {2, 0}, {3, 0}};
  EXPECT_EQ(shift(ramp), (ControlSequence{{2, 0}, {3, 0}, {3, 0}}));
  const ControlSequence single{{0.4, 0.2}};
  EXPECT_EQ(shift(single), single);
  const ControlSequence flat(5, ControlInput{0.1, 0.1});
  EXPECT_EQ(shift(flat), flat);
}

TEST(MppiIteration, SingleAgentReachesGoal) {
  // plain MPPI at H = 30, 5 m goal, 10 seeds, <= 200 steps; actuation noise applied
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    AgentState s;
    const double heading = 0.7 * static_cast<double>(seed);
    const Vec2 goal = Vec2{5.0 * std::cos(heading), 5.0 * std::sin(heading)};
    ControlSequence u(30, ControlInput{});
    MppiParams p;
    p.horizon = 30;
    p.policy_rollouts = 0;
    CostContext ctx;
    ctx.goal = goal;
    int steps = 0;
    NormalSampler exec(RngStream(seed).substream(99));
    while (norm(s.position() - goal) > 0.3 && steps < 200) {
      const auto it = mppi_iteration(s, u, ctx, p, kNoise, kBounds, 0.1, RngStream(seed).substream(steps));
      s = step(s, perturb_and_clamp(it.u_star.front(), kNoise, kBounds, exec), 0.1);
      u = it.next_init;
      ++steps;
    }
    EXPECT_LE(norm(s.position() - goal), 0.3) << "seed " << seed;
  }
}

TEST(MppiIteration, Reproducible) {
  CostContext ctx;
  ctx.goal = {2.0, 1.0};
  const ControlSequence u(10, ControlInput{0.3, 0.0});
  const auto a = mppi_iteration(AgentState{}, u, ctx, MppiParams{}, kNoise, kBounds, 0.1, RngStream(12));
  const auto b = mppi_iteration(AgentState{}, u, ctx, MppiParams{}, kNoise, kBounds, 0.1, RngStream(12));
  EXPECT_EQ(a.u_star, b.u_star);
}

TEST(MppiParams, Validation) {
  MppiParams p;
  p.policy_rollouts = p.rollouts + 1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.lambda = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.horizon = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
