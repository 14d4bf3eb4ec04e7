#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "corl/chance_projection.hpp"
#include "corl/mppi.hpp"
#include "corl/orca.hpp"
#include "corl/policy.hpp"

namespace corl {

struct NeighborTrack {
  Vec2 position;
  Vec2 velocity;
  double radius{0.3};
};

struct PlannerConfig {
  MppiParams mppi;
  int safety_horizon{10};        // steps whose distributions are projected
  bool safety_constraints{true}; // false: plain MPPI, no projection at all
  OrcaParams orca;
  SafetyLevels levels;
  CostWeights cost;
  double dt{0.1};
  std::shared_ptr<const GuidancePolicy> policy;  // null: no guidance branch

  int effective_policy_rollouts() const { return policy ? mppi.policy_rollouts : 0; }

  void validate() const {
    mppi.validate();
    orca.validate();
    levels.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("PlannerConfig: dt must be positive");
    if (safety_horizon < 1 || safety_horizon > mppi.horizon)
      throw std::invalid_argument("PlannerConfig: safety_horizon must lie in [1, horizon]");
  }
};

/// Preset used for the guided planner: H = 10, K = 1500, 30 % guided rollouts.
inline PlannerConfig corl_mppi_preset(std::shared_ptr<const GuidancePolicy> policy) {
  PlannerConfig c;
  c.mppi.horizon = 10;
  c.mppi.rollouts = 1500;
  c.mppi.policy_rollouts = 450;
  c.safety_horizon = c.mppi.horizon;
  c.policy = std::move(policy);
  return c;
}

/// Constrained MPPI without guidance: H = 30, K = 1500.
inline PlannerConfig mppi_orca_preset() {
  PlannerConfig c;
  c.mppi.horizon = 30;
  c.mppi.rollouts = 1500;
  c.mppi.policy_rollouts = 0;
  c.safety_horizon = c.mppi.horizon;
  return c;
}

/// The constrained baseline with the projection switched off: H = 30,
/// K = 1500. At H = 10 a goal directly behind is a flat spot of the cost
/// (turning in place changes nothing within 1 s), and the agent stalls.
inline PlannerConfig vanilla_mppi_preset() {
  PlannerConfig c;
  c.mppi.horizon = 30;
  c.mppi.rollouts = 1500;
  c.mppi.policy_rollouts = 0;
  c.safety_horizon = c.mppi.horizon;
  c.safety_constraints = false;
  return c;
}

/// Constant-velocity prediction; result[t][j] for t = 0..H.
inline std::vector<std::vector<Vec2>> predict_neighbors(std::span<const NeighborTrack> tracks, int horizon,
                                                        double dt) {
  std::vector<std::vector<Vec2>> out(static_cast<std::size_t>(horizon) + 1);
  for (auto& row : out) row.reserve(tracks.size());
  for (const auto& tr : tracks) {
    Vec2 p = tr.position;
    out[0].push_back(p);
    for (int t = 1; t <= horizon; ++t) {
      p = p + tr.velocity * dt;
      out[static_cast<std::size_t>(t)].push_back(p);
    }
  }
  return out;
}

inline ControlSequence bootstrap_sequence(int horizon) {
  return ControlSequence(static_cast<std::size_t>(std::max(horizon, 0)), ControlInput{});
}

struct PlanDiagnostics {
  std::vector<ProjectionStatus> policy_status;  // per projected step
  std::vector<ProjectionStatus> mppi_status;
  std::vector<std::vector<HalfPlaneConstraint>> policy_constraints;  // per projected step
  std::vector<std::vector<HalfPlaneConstraint>> mppi_constraints;
  DistributionSequence policy_distribution;  // what the guided rollouts were drawn from
  DistributionSequence mppi_distribution;
  double min_predicted_distance{std::numeric_limits<double>::infinity()};
  int policy_samples{0};
  int mppi_samples{0};
};

struct PlanResult {
  ControlInput command;
  ControlSequence u_star;
  ControlSequence next_init;
  PlanDiagnostics diagnostics;
};

namespace detail {

// Projects one branch-step. Infeasible steps fall back to braking with the
// nominal turn rate and zero spread.
inline GaussianControl project_branch(const GaussianControl& nominal, const AgentState& state, double self_radius,
                                      std::span<const NeighborTrack> tracks, std::span<const Vec2> predicted,
                                      const PlannerConfig& cfg, const NoiseModel& noise,
                                      const ControlBounds& bounds, std::vector<ProjectionStatus>& status_log,
                                      std::vector<std::vector<HalfPlaneConstraint>>& constraint_log) {
  std::vector<Neighbor> nbs;
  nbs.reserve(tracks.size());
  for (std::size_t j = 0; j < tracks.size(); ++j)
    nbs.push_back({predicted[j] - state.position(), tracks[j].velocity, tracks[j].radius});
  auto cs = constraints_for_agent(state, self_radius, state.velocity(), nbs, cfg.orca, cfg.dt);
  if (cs.empty()) {
    status_log.push_back(ProjectionStatus::exact);
    constraint_log.emplace_back();
    return nominal;
  }
  const auto res = project(nominal, noise, cs, bounds, cfg.levels);
  status_log.push_back(res.status);
  constraint_log.push_back(std::move(cs));
  if (res.status == ProjectionStatus::infeasible_fallback) return {{0.0, nominal.mean.w}, {0.0, 0.0}};
  return res.adjusted;
}

// Pulls the mean inside the bounds far enough that the nominal spread
// already meets the bound rows. Without this a saturated u_init makes the
// projection drop the spread to zero (cheaper in L1 than moving the mean),
// and with zero spread MPPI can never leave the saturated command.
inline GaussianControl fit_spread_in_bounds(GaussianControl g, const ControlBounds& bounds, double z_u) {
  for (int k = 0; k < 2; ++k) {
    const double lo = bounds.lo(k) + z_u * g.std[k];
    const double hi = bounds.hi(k) - z_u * g.std[k];
    g.mean[k] = lo <= hi ? std::clamp(g.mean[k], lo, hi) : 0.5 * (bounds.lo(k) + bounds.hi(k));
  }
  return g;
}

}  // namespace detail

/// One receding-horizon step of the guided, chance-constrained MPPI.
///
/// Both nominal trajectories are rolled forward step by step: the guidance
/// branch queries the policy at its own predicted state, the MPPI branch
/// reads u_init. Inside the safety horizon each branch distribution is
/// projected against ORCA constraints built at that branch's predicted state.
/// Guided rollouts take substreams [0, K_pi), the rest [K_pi, K).
inline PlanResult plan(const AgentState& self, double self_radius, const Vec2& goal, const ControlSequence& u_init,
                       std::span<const NeighborTrack> tracks, const PlannerConfig& cfg, const NoiseModel& noise,
                       const ControlBounds& bounds, const RngStream& stream) {
  const int horizon = cfg.mppi.horizon;
  if (static_cast<int>(u_init.size()) != horizon)
    throw std::invalid_argument("plan: u_init length must equal the horizon");
  const int k_total = cfg.mppi.rollouts;
  const int k_pi = cfg.effective_policy_rollouts();
  const bool guided = k_pi > 0;

  const auto predicted = predict_neighbors(tracks, horizon, cfg.dt);
  const auto nominal = nominal_distribution(u_init, noise, cfg.mppi.variance_scale);

  PlanResult result;
  auto& diag = result.diagnostics;
  diag.mppi_distribution.resize(static_cast<std::size_t>(horizon));
  if (guided) diag.policy_distribution.resize(static_cast<std::size_t>(horizon));

  AgentState x_pi = self;
  AgentState x_mppi = self;
  const bool project_any = cfg.safety_constraints && !tracks.empty();
  const double z_u = project_any ? inv_normal_cdf(cfg.levels.delta_u) : 0.0;
  for (int t = 1; t <= horizon; ++t) {
    const auto s = static_cast<std::size_t>(t - 1);
    GaussianControl g_mppi = nominal[s];
    GaussianControl g_pi;
    if (guided) {
      const auto obs = build_observation(x_pi, goal, predicted[s], cfg.policy->k_neighbors(),
                                         cfg.policy->sense_range());
      const auto out = cfg.policy->act(obs);
      g_pi = {bounds.clamp(out.mean), out.std};
    }
    if (project_any && t <= cfg.safety_horizon) {
      if (guided)
        g_pi = detail::project_branch(g_pi, x_pi, self_radius, tracks, predicted[s], cfg, noise, bounds,
                                      diag.policy_status, diag.policy_constraints);
      g_mppi = detail::project_branch(detail::fit_spread_in_bounds(g_mppi, bounds, z_u), x_mppi, self_radius, tracks,
                                      predicted[s], cfg, noise, bounds, diag.mppi_status, diag.mppi_constraints);
    }
    if (guided) {
      diag.policy_distribution[s] = g_pi;
      x_pi = step(x_pi, bounds.clamp(g_pi.mean), cfg.dt);
    }
    diag.mppi_distribution[s] = g_mppi;
    x_mppi = step(x_mppi, bounds.clamp(g_mppi.mean), cfg.dt);
  }

  std::vector<Rollout> rollouts;
  rollouts.reserve(static_cast<std::size_t>(k_total));
  if (guided) {
    rollouts = sample_rollouts(diag.policy_distribution, k_pi, self, bounds, cfg.dt, stream, Branch::policy, 0);
  }
  {
    auto rest = sample_rollouts(diag.mppi_distribution, k_total - k_pi, self, bounds, cfg.dt, stream, Branch::mppi,
                                k_pi);
    std::move(rest.begin(), rest.end(), std::back_inserter(rollouts));
  }
  diag.policy_samples = k_pi;
  diag.mppi_samples = k_total - k_pi;

  CostContext ctx;
  ctx.goal = goal;
  ctx.self_radius = self_radius;
  ctx.weights = cfg.cost;
  ctx.neighbor_positions = predicted;
  ctx.neighbor_radii.reserve(tracks.size());
  for (const auto& tr : tracks) ctx.neighbor_radii.push_back(tr.radius);
  ctx.prepare(self.position(), std::max(std::abs(bounds.v_min), std::abs(bounds.v_max)), cfg.dt);

  std::vector<double> costs(rollouts.size());
  for (std::size_t k = 0; k < rollouts.size(); ++k) {
    const auto& dist = rollouts[k].branch == Branch::policy ? diag.policy_distribution : diag.mppi_distribution;
    rollouts[k].cost = rollout_cost(rollouts[k], dist, ctx, cfg.mppi, noise);
    costs[k] = rollouts[k].cost;
  }
  const auto w = weights(costs, cfg.mppi.lambda);
  result.u_star = weighted_update(rollouts, w, bounds);
  result.next_init = shift(result.u_star);
  result.command = result.u_star.front();

  if (!tracks.empty()) {
    AgentState x = self;
    for (int t = 1; t <= horizon; ++t) {
      x = step(x, result.u_star[static_cast<std::size_t>(t - 1)], cfg.dt);
      for (const auto& p : predicted[static_cast<std::size_t>(t)])
        diag.min_predicted_distance = std::min(diag.min_predicted_distance, norm(p - x.position()));
    }
  }
  return result;
}

}  // namespace corl
