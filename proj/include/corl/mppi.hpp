#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "corl/chance_projection.hpp"
#include "corl/dynamics.hpp"
#include "corl/rng.hpp"
#include "corl/vec2.hpp"

namespace corl {

using ControlSequence = std::vector<ControlInput>;
using DistributionSequence = std::vector<GaussianControl>;

enum class Branch { policy, mppi };

struct Rollout {
  ControlSequence controls;
  std::vector<Vec2> noise;         // executed deviation from the branch mean, per step
  std::vector<AgentState> states;  // H + 1 states, states[0] is the start
  double cost{0.0};
  Branch branch{Branch::mppi};
};

struct MppiParams {
  int horizon{10};
  int rollouts{1500};
  int policy_rollouts{450};
  double lambda{0.1};          // inverse temperature
  double gamma{0.001};         // control-cost weight
  double variance_scale{1.0};  // sampling covariance = variance_scale * Sigma

  void validate() const {
    if (horizon < 1) throw std::invalid_argument("MppiParams: horizon must be >= 1");
    if (rollouts < 1) throw std::invalid_argument("MppiParams: rollouts must be >= 1");
    if (policy_rollouts < 0 || policy_rollouts > rollouts)
      throw std::invalid_argument("MppiParams: policy_rollouts must lie in [0, rollouts]");
    if (!(lambda > 0.0)) throw std::invalid_argument("MppiParams: lambda must be positive");
    if (gamma < 0.0) throw std::invalid_argument("MppiParams: gamma must be >= 0");
    if (!(variance_scale > 0.0)) throw std::invalid_argument("MppiParams: variance_scale must be positive");
  }
};

struct CostWeights {
  double goal{1.0};                 // per metre, every step
  double proximity{0.5};            // times 1 / max(d, proximity_floor) to the nearest neighbour
  double proximity_floor{0.05};     // metres
  double collision{1000.0};         // per step with centre distance < r_i + r_j
  double negative_velocity{5.0};    // times max(0, -v)
  double terminal{10.0};            // per metre at the final state
};

/// Everything the state-dependent part of the cost needs. Neighbour
/// predictions are indexed [step][neighbour] for steps 0..H.
struct CostContext {
  Vec2 goal;
  double self_radius{0.3};
  std::vector<std::vector<Vec2>> neighbor_positions;
  std::vector<double> neighbor_radii;
  CostWeights weights;

  /// Per step, the neighbours that can be the nearest one or a collision
  /// for any state reachable from `start` at speed <= max_speed. Pruning is
  /// exact: any excluded neighbour is farther than some included one.
  void prepare(const Vec2& start, double max_speed, double dt) {
    candidates.assign(neighbor_positions.size(), {});
    for (std::size_t t = 0; t < neighbor_positions.size(); ++t) {
      const auto& pos = neighbor_positions[t];
      if (pos.empty()) continue;
      const double reach = max_speed * dt * static_cast<double>(t) + 1e-9;
      double best_upper = std::numeric_limits<double>::infinity();
      std::vector<double> d(pos.size());
      for (std::size_t j = 0; j < pos.size(); ++j) {
        d[j] = norm(pos[j] - start);
        best_upper = std::min(best_upper, d[j] + reach);
      }
      for (std::size_t j = 0; j < pos.size(); ++j) {
        const double lower = d[j] - reach;
        if (lower <= best_upper || lower < self_radius + neighbor_radii[j])
          candidates[t].push_back(static_cast<std::uint32_t>(j));
      }
    }
    prepared = true;
  }

  std::vector<std::vector<std::uint32_t>> candidates;
  bool prepared{false};
};

/// Draws `count` rollouts around `dist`. Rollout i uses substream
/// (first_index + i) of `stream`, so any subset can be regenerated alone.
inline std::vector<Rollout> sample_rollouts(const DistributionSequence& dist, int count,
                                            const AgentState& start, const ControlBounds& bounds,
                                            double dt, const RngStream& stream, Branch branch,
                                            int first_index = 0) {
  std::vector<Rollout> out;
  if (count <= 0) return out;
  const std::size_t h = dist.size();
  out.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rollout& r = out[static_cast<std::size_t>(i)];
    r.branch = branch;
    r.controls.resize(h);
    r.noise.resize(h);
    r.states.resize(h + 1);
    r.states[0] = start;
    NormalSampler gauss(stream.substream(static_cast<std::uint64_t>(first_index + i)));
    for (std::size_t t = 0; t < h; ++t) {
      const auto& g = dist[t];
      const double ev = gauss() * g.std[0];
      const double ew = gauss() * g.std[1];
      const ControlInput u = bounds.clamp({g.mean.v + ev, g.mean.w + ew});
      r.controls[t] = u;
      r.noise[t] = {u.v - g.mean.v, u.w - g.mean.w};
      r.states[t + 1] = step(r.states[t], u, dt);
    }
  }
  return out;
}

/// Path-integral cost of one rollout. `sampled_from` is the distribution
/// sequence the rollout was drawn from; its per-step spread defines the
/// variance-scale term. State costs are charged on states[1..H].
inline double rollout_cost(const Rollout& r, std::span<const GaussianControl> sampled_from,
                           const CostContext& ctx, const MppiParams& params, const NoiseModel& exec_noise) {
  const std::size_t h = r.controls.size();
  const auto& w = ctx.weights;
  const double inv_var[2] = {1.0 / exec_noise.variance(0), 1.0 / exec_noise.variance(1)};
  double cost = 0.0;
  for (std::size_t t = 0; t < h; ++t) {
    const AgentState& x = r.states[t + 1];
    const Vec2 p = x.position();
    cost += w.goal * norm(p - ctx.goal);

    if (t + 1 < ctx.neighbor_positions.size() && !ctx.neighbor_positions[t + 1].empty()) {
      const auto& pos = ctx.neighbor_positions[t + 1];
      double nearest = std::numeric_limits<double>::infinity();
      auto visit = [&](std::size_t j) {
        const double d = norm(pos[j] - p);
        nearest = std::min(nearest, d);
        if (d < ctx.self_radius + ctx.neighbor_radii[j]) cost += w.collision;
      };
      if (ctx.prepared) {
        for (auto j : ctx.candidates[t + 1]) visit(j);
      } else {
        for (std::size_t j = 0; j < pos.size(); ++j) visit(j);
      }
      cost += w.proximity / std::max(nearest, w.proximity_floor);
    }

    const ControlInput& u = r.controls[t];
    cost += w.negative_velocity * std::max(0.0, -u.v);

    const Vec2& eps = r.noise[t];
    const double mean[2] = {u.v - eps.x, u.w - eps.y};
    const double e[2] = {eps.x, eps.y};
    double control = 0.0;
    double spread = 0.0;
    for (int k = 0; k < 2; ++k) {
      control += mean[k] * inv_var[k] * mean[k] + 2.0 * mean[k] * inv_var[k] * e[k];
      const double scale = sampled_from[t].std[k] * sampled_from[t].std[k] * inv_var[k];
      if (scale > 0.0) spread += (1.0 - 1.0 / scale) * e[k] * inv_var[k] * e[k];
    }
    cost += 0.5 * params.gamma * control + 0.5 * params.lambda * spread;
  }
  cost += w.terminal * norm(r.states[h].position() - ctx.goal);
  return cost;
}

/// Softmax of -cost / lambda, shifted by the minimum cost.
inline std::vector<double> weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw std::invalid_argument("weights: empty cost list");
  const double best = *std::min_element(costs.begin(), costs.end());
  std::vector<double> w(costs.size());
  double total = 0.0;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    w[k] = std::exp(-(costs[k] - best) / lambda);
    total += w[k];
  }
  for (auto& x : w) x /= total;
  return w;
}

inline ControlSequence weighted_update(std::span<const Rollout> rollouts, std::span<const double> w,
                                       const ControlBounds& bounds) {
  if (rollouts.size() != w.size()) throw std::invalid_argument("weighted_update: size mismatch");
  if (rollouts.empty()) return {};
  const std::size_t h = rollouts.front().controls.size();
  ControlSequence out(h);
  for (std::size_t t = 0; t < h; ++t) {
    double v = 0.0;
    double om = 0.0;
    for (std::size_t k = 0; k < rollouts.size(); ++k) {
      v += w[k] * rollouts[k].controls[t].v;
      om += w[k] * rollouts[k].controls[t].w;
    }
    out[t] = bounds.clamp({v, om});
  }
  return out;
}

/// (u_1, ..., u_{H-1}, u_{H-1}).
inline ControlSequence shift(const ControlSequence& u) {
  if (u.empty()) return u;
  ControlSequence out(u.begin() + 1, u.end());
  out.push_back(u.back());
  return out;
}

/// Nominal MPPI distribution around u_init with spread sqrt(scale) * sigma.
inline DistributionSequence nominal_distribution(const ControlSequence& u_init, const NoiseModel& noise,
                                                 double variance_scale) {
  DistributionSequence d(u_init.size());
  const double s = std::sqrt(variance_scale);
  for (std::size_t t = 0; t < u_init.size(); ++t) d[t] = {u_init[t], {s * noise.sigma_v, s * noise.sigma_w}};
  return d;
}

struct MppiIteration {
  ControlSequence u_star;
  ControlSequence next_init;
};

/// One plain MPPI iteration: sample around the nominal sequence, score,
/// weight, average, shift.
inline MppiIteration mppi_iteration(const AgentState& start, const ControlSequence& u_init, CostContext ctx,
                                    const MppiParams& params, const NoiseModel& noise,
                                    const ControlBounds& bounds, double dt, const RngStream& stream) {
  const auto dist = nominal_distribution(u_init, noise, params.variance_scale);
  auto rollouts = sample_rollouts(dist, params.rollouts, start, bounds, dt, stream, Branch::mppi);
  ctx.prepare(start.position(), std::max(std::abs(bounds.v_min), std::abs(bounds.v_max)), dt);
  std::vector<double> costs(rollouts.size());
  for (std::size_t k = 0; k < rollouts.size(); ++k) {
    rollouts[k].cost = rollout_cost(rollouts[k], dist, ctx, params, noise);
    costs[k] = rollouts[k].cost;
  }
  const auto w = weights(costs, params.lambda);
  MppiIteration it;
  it.u_star = weighted_update(rollouts, w, bounds);
  it.next_init = shift(it.u_star);
  return it;
}

}  // namespace corl
