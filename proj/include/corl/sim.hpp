#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "corl/dynamics.hpp"
#include "corl/orca_dd.hpp"
#include "corl/parallel.hpp"
#include "corl/planner.hpp"
#include "corl/rng.hpp"
#include "corl/scenarios.hpp"

namespace corl {

enum class Algorithm { corl_mppi, mppi_orca, mppi, orca_dd };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::corl_mppi: return "corl-mppi";
    case Algorithm::mppi_orca: return "mppi-orca";
    case Algorithm::mppi: return "mppi";
    case Algorithm::orca_dd: return "orca-dd";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "corl-mppi") return Algorithm::corl_mppi;
  if (s == "mppi-orca") return Algorithm::mppi_orca;
  if (s == "mppi") return Algorithm::mppi;
  if (s == "orca-dd") return Algorithm::orca_dd;
  throw std::invalid_argument("unknown algorithm '" + s + "' (expected corl-mppi, mppi-orca, mppi or orca-dd)");
}

/// What drives one agent. MPPI-family algorithms use `planner`, ORCA-DD
/// uses `orca_dd`.
struct AgentController {
  Algorithm algo{Algorithm::mppi_orca};
  PlannerConfig planner;
  OrcaDDConfig orca_dd;

  bool uses_planner() const { return algo != Algorithm::orca_dd; }
  int horizon() const { return uses_planner() ? planner.mppi.horizon : 0; }
};

/// Preset controller. `policy` is only consulted for corl-mppi; a null
/// policy there falls back to the scripted proxy.
inline AgentController make_controller(Algorithm algo, const ControlBounds& bounds,
                                       std::shared_ptr<const GuidancePolicy> policy = nullptr) {
  AgentController c;
  c.algo = algo;
  switch (algo) {
    case Algorithm::corl_mppi:
      c.planner = corl_mppi_preset(policy ? std::move(policy) : std::make_shared<ProxyPolicy>(bounds));
      break;
    case Algorithm::mppi_orca: c.planner = mppi_orca_preset(); break;
    case Algorithm::mppi: c.planner = vanilla_mppi_preset(); break;
    case Algorithm::orca_dd:
      c.orca_dd.preferred_speed = bounds.v_max;
      break;
  }
  return c;
}

struct SimConfig {
  double dt{0.1};
  int step_limit{1000};
  double goal_tolerance{0.3};
  NoiseModel noise;
  ControlBounds bounds;
  int jobs{1};  // threads for per-agent planning within a tick

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be positive");
    if (step_limit < 0) throw std::invalid_argument("SimConfig: step_limit must be >= 0");
    if (!(goal_tolerance > 0.0)) throw std::invalid_argument("SimConfig: goal_tolerance must be positive");
    noise.validate();
    bounds.validate();
  }
};

struct WorldAgent {
  AgentState state;
  Vec2 goal;
  double radius{0.3};
  std::optional<int> reached_at;
  ControlSequence u_init;
  ControlInput last_command;
  ControlInput last_executed;
};

struct WorldState {
  std::vector<WorldAgent> agents;
  int step{0};
  std::uint64_t seed{0};
  bool collision{false};
  double min_pairwise_dist{std::numeric_limits<double>::infinity()};
};

struct TrajectoryRecord {
  int step;
  int agent;
  double px, py, theta;
  double v_cmd, w_cmd;
  double v_exec, w_exec;
};

inline void write_trajectory_header(std::ostream& os) {
  os << "run,step,agent,px,py,theta,v_cmd,w_cmd,v_exec,w_exec\n";
}

inline void write_trajectory(std::ostream& os, int run, std::span<const TrajectoryRecord> recs) {
  for (const auto& r : recs) {
    os << run << ',' << r.step << ',' << r.agent << ',' << r.px << ',' << r.py << ',' << r.theta << ',' << r.v_cmd
       << ',' << r.w_cmd << ',' << r.v_exec << ',' << r.w_exec << '\n';
  }
}

namespace detail {

inline double min_pairwise(const std::vector<WorldAgent>& agents, bool& collision) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      const double d = norm(agents[i].state.position() - agents[j].state.position());
      best = std::min(best, d);
      if (d < agents[i].radius + agents[j].radius) collision = true;
    }
  }
  return best;
}

inline void latch_arrivals(WorldState& w, double tol) {
  for (auto& a : w.agents)
    if (!a.reached_at && norm(a.state.position() - a.goal) <= tol) a.reached_at = w.step;
}

}  // namespace detail

inline WorldState make_world(const Scenario& sc, std::span<const AgentController> controllers, std::uint64_t seed,
                             const SimConfig& cfg) {
  if (controllers.size() != sc.agents.size())
    throw std::invalid_argument("make_world: need one controller per agent");
  WorldState w;
  w.seed = seed;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    WorldAgent a;
    a.state = sc.agents[i].start;
    a.state.vx = 0.0;
    a.state.vy = 0.0;
    a.goal = sc.agents[i].goal;
    a.radius = sc.agents[i].radius;
    a.u_init = bootstrap_sequence(controllers[i].horizon());
    w.agents.push_back(a);
  }
  bool unused = false;
  w.min_pairwise_dist = detail::min_pairwise(w.agents, unused);
  detail::latch_arrivals(w, cfg.goal_tolerance);
  return w;
}

/// Per-(agent, step) stream: substream 0 plans, 1 perturbs execution,
/// 2 drives baseline jitter.
inline RngStream agent_step_stream(std::uint64_t seed, std::size_t agent, int step) {
  return RngStream(seed).substream(agent).substream(static_cast<std::uint64_t>(step));
}

/// One synchronous round. Every agent plans against the previous state of
/// all others, then all perturbed commands are applied together.
/// `order` only permutes the planning order; it never changes the result.
inline WorldState tick(const WorldState& world, const SimConfig& cfg, std::span<const AgentController> controllers,
                       std::vector<TrajectoryRecord>* log = nullptr,
                       std::span<const std::size_t> order = {}) {
  const std::size_t n = world.agents.size();
  if (controllers.size() != n) throw std::invalid_argument("tick: need one controller per agent");
  std::vector<std::size_t> idx(n);
  if (order.empty()) std::iota(idx.begin(), idx.end(), std::size_t{0});
  else idx.assign(order.begin(), order.end());

  struct Slot {
    ControlInput command;
    ControlSequence next_init;
  };
  std::vector<Slot> slots(n);

  parallel_for(n, cfg.jobs, [&](std::size_t q) {
    const std::size_t i = idx[q];
    const auto& me = world.agents[i];
    std::vector<NeighborTrack> tracks;
    tracks.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& o = world.agents[j];
      tracks.push_back({o.state.position(), o.state.velocity(), o.radius});
    }
    const RngStream s = agent_step_stream(world.seed, i, world.step);
    const auto& ctl = controllers[i];
    if (ctl.uses_planner()) {
      const auto res = plan(me.state, me.radius, me.goal, me.u_init, tracks, ctl.planner, cfg.noise, cfg.bounds,
                            s.substream(0));
      slots[i] = {res.command, res.next_init};
    } else {
      NormalSampler jitter(s.substream(2));
      slots[i] = {orca_dd_command(me.state, me.radius, me.goal, tracks, ctl.orca_dd, cfg.bounds, cfg.dt, jitter), {}};
    }
  });

  WorldState next = world;
  next.step = world.step + 1;
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = next.agents[i];
    NormalSampler exec(agent_step_stream(world.seed, i, world.step).substream(1));
    const ControlInput executed = perturb_and_clamp(slots[i].command, cfg.noise, cfg.bounds, exec);
    a.state = step(a.state, executed, cfg.dt);
    a.u_init = std::move(slots[i].next_init);
    a.last_command = slots[i].command;
    a.last_executed = executed;
    if (log) {
      log->push_back({next.step, static_cast<int>(i), a.state.px, a.state.py, a.state.theta, slots[i].command.v,
                      slots[i].command.w, executed.v, executed.w});
    }
  }
  bool collided = false;
  next.min_pairwise_dist = std::min(world.min_pairwise_dist, detail::min_pairwise(next.agents, collided));
  next.collision = world.collision || collided;
  detail::latch_arrivals(next, cfg.goal_tolerance);
  return next;
}

enum class RunStatus { success, collision, timeout };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::success: return "success";
    case RunStatus::collision: return "collision";
    case RunStatus::timeout: return "timeout";
  }
  return "?";
}

struct RunOutcome {
  RunStatus status{RunStatus::timeout};
  std::optional<double> makespan_s;
  std::vector<std::optional<int>> arrival_steps;
  double min_pairwise_dist{std::numeric_limits<double>::infinity()};
  int steps_executed{0};
};

/// Ticks until every agent has latched its goal, a collision occurs (the
/// run stops immediately) or the step limit is reached.
inline RunOutcome run(const Scenario& sc, std::span<const AgentController> controllers, const SimConfig& cfg,
                      std::uint64_t seed, std::vector<TrajectoryRecord>* log = nullptr) {
  cfg.validate();
  WorldState w = make_world(sc, controllers, seed, cfg);
  RunOutcome out;
  auto all_reached = [&] {
    return std::all_of(w.agents.begin(), w.agents.end(), [](const WorldAgent& a) { return a.reached_at.has_value(); });
  };
  while (true) {
    if (all_reached()) {
      out.status = RunStatus::success;
      break;
    }
    if (w.step >= cfg.step_limit) {
      out.status = RunStatus::timeout;
      break;
    }
    w = tick(w, cfg, controllers, log);
    if (w.collision) {
      out.status = RunStatus::collision;
      break;
    }
  }
  out.steps_executed = w.step;
  out.min_pairwise_dist = w.min_pairwise_dist;
  for (const auto& a : w.agents) out.arrival_steps.push_back(a.reached_at);
  if (out.status == RunStatus::success) {
    int last = 0;
    for (const auto& s : out.arrival_steps) last = std::max(last, *s);
    out.makespan_s = cfg.dt * last;
  }
  return out;
}

/// Same controller for every agent.
inline RunOutcome run(const Scenario& sc, const AgentController& controller, const SimConfig& cfg, std::uint64_t seed,
                      std::vector<TrajectoryRecord>* log = nullptr) {
  std::vector<AgentController> cs(sc.agents.size(), controller);
  return run(sc, cs, cfg, seed, log);
}

}  // namespace corl
