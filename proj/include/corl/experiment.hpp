#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corl/parallel.hpp"
#include "corl/policy.hpp"
#include "corl/scenarios.hpp"
#include "corl/sim.hpp"

namespace corl {

/// Raised for anything wrong with the user's configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioEntry {
  ScenarioKind kind{ScenarioKind::circle};
  std::vector<int> sizes;       // N for circle/random, grid_n for mesh
  std::optional<int> mesh_n;    // agents in a mesh; default fills every cell
  double diameter{14.0};
  double cell_size{1.5};
  double area{40.0};
};

struct PlannerOverrides {
  std::optional<int> horizon, rollouts, policy_rollouts, safety_horizon;
  std::optional<double> lambda, gamma, variance_scale, delta_u, delta_nu, tau, reciprocity, radius_buffer;
  std::optional<bool> safety_constraints;
  nlohmann::json cost = nlohmann::json::object();
};

struct ExperimentConfig {
  std::vector<ScenarioEntry> scenarios;
  std::vector<Algorithm> algorithms{Algorithm::corl_mppi};
  int instances{1};
  int repetitions{10};
  std::uint64_t seed_base{0};
  SimConfig sim;
  PlannerOverrides planner;
  std::optional<std::string> policy_weights;  // null: scripted proxy policy
  OrcaDDConfig orca_dd;
  bool orca_dd_speed_set{false};
  std::optional<std::string> out;
  std::optional<std::string> traj;
  nlohmann::json source = nlohmann::json::object();  // as given, echoed into metrics
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where + ": unknown key '" + k + "' (allowed: " + list + ")");
    }
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& dst, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& dst, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_opt(j, key, v, where);
  dst = v;
}

inline std::vector<int> int_or_array(const nlohmann::json& j, const std::string& where) {
  try {
    if (j.is_number_integer()) return {j.get<int>()};
    if (j.is_array()) return j.get<std::vector<int>>();
  } catch (const nlohmann::json::exception&) {
  }
  throw ConfigError(where + ": expected an integer or an array of integers");
}

inline ScenarioEntry parse_scenario(const nlohmann::json& j, const std::string& where) {
  ScenarioEntry e;
  if (!j.is_object() || !j.contains("kind")) throw ConfigError(where + ": missing 'kind'");
  try {
    e.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  } catch (const std::exception& ex) {
    throw ConfigError(where + ": " + ex.what());
  }
  switch (e.kind) {
    case ScenarioKind::circle:
      check_keys(j, {"kind", "n", "diameter"}, where);
      if (!j.contains("n")) throw ConfigError(where + ": circle needs 'n'");
      e.sizes = int_or_array(j.at("n"), where + ".n");
      read_opt(j, "diameter", e.diameter, where);
      break;
    case ScenarioKind::mesh:
      check_keys(j, {"kind", "grid_n", "cell_size", "n"}, where);
      if (!j.contains("grid_n")) throw ConfigError(where + ": mesh needs 'grid_n'");
      e.sizes = int_or_array(j.at("grid_n"), where + ".grid_n");
      read_opt(j, "cell_size", e.cell_size, where);
      read_opt(j, "n", e.mesh_n, where);
      break;
    case ScenarioKind::random:
      check_keys(j, {"kind", "n", "area"}, where);
      if (!j.contains("n")) throw ConfigError(where + ": random needs 'n'");
      e.sizes = int_or_array(j.at("n"), where + ".n");
      read_opt(j, "area", e.area, where);
      break;
  }
  if (e.sizes.empty()) throw ConfigError(where + ": size list is empty");
  return e;
}

inline const std::set<std::string> kCostKeys{"goal",      "proximity",         "proximity_floor",
                                             "collision", "negative_velocity", "terminal"};

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::check_keys;
  using detail::read_opt;
  ExperimentConfig c;
  c.source = j;
  check_keys(j,
             {"scenarios", "algorithms", "instances", "repetitions", "seed_base", "sim", "planner", "policy",
              "orca_dd", "out", "traj"},
             "config");
  if (j.contains("scenarios")) {
    if (!j.at("scenarios").is_array()) throw ConfigError("config.scenarios: expected an array");
    for (std::size_t i = 0; i < j.at("scenarios").size(); ++i)
      c.scenarios.push_back(detail::parse_scenario(j.at("scenarios")[i], "config.scenarios[" + std::to_string(i) + "]"));
  } else {
    ScenarioEntry e;
    e.sizes = {8};
    c.scenarios.push_back(e);
  }
  if (j.contains("algorithms")) {
    std::vector<std::string> names;
    read_opt(j, "algorithms", names, "config");
    c.algorithms.clear();
    for (const auto& n : names) {
      try {
        c.algorithms.push_back(algorithm_from_string(n));
      } catch (const std::exception& e) {
        throw ConfigError(std::string("config.algorithms: ") + e.what());
      }
    }
  }
  read_opt(j, "instances", c.instances, "config");
  read_opt(j, "repetitions", c.repetitions, "config");
  read_opt(j, "seed_base", c.seed_base, "config");
  read_opt(j, "out", c.out, "config");
  read_opt(j, "traj", c.traj, "config");

  if (j.contains("sim")) {
    const auto& s = j.at("sim");
    check_keys(s, {"dt", "step_limit", "goal_tolerance", "sigma_v", "sigma_w", "v_min", "v_max", "w_min", "w_max"},
               "config.sim");
    read_opt(s, "dt", c.sim.dt, "config.sim");
    read_opt(s, "step_limit", c.sim.step_limit, "config.sim");
    read_opt(s, "goal_tolerance", c.sim.goal_tolerance, "config.sim");
    read_opt(s, "sigma_v", c.sim.noise.sigma_v, "config.sim");
    read_opt(s, "sigma_w", c.sim.noise.sigma_w, "config.sim");
    read_opt(s, "v_min", c.sim.bounds.v_min, "config.sim");
    read_opt(s, "v_max", c.sim.bounds.v_max, "config.sim");
    read_opt(s, "w_min", c.sim.bounds.w_min, "config.sim");
    read_opt(s, "w_max", c.sim.bounds.w_max, "config.sim");
  }
  if (j.contains("planner")) {
    const auto& p = j.at("planner");
    const std::string w = "config.planner";
    check_keys(p,
               {"horizon", "rollouts", "policy_rollouts", "safety_horizon", "lambda", "gamma", "variance_scale",
                "delta_u", "delta_nu", "tau", "reciprocity", "radius_buffer", "safety_constraints", "cost"},
               w);
    auto& o = c.planner;
    read_opt(p, "horizon", o.horizon, w);
    read_opt(p, "rollouts", o.rollouts, w);
    read_opt(p, "policy_rollouts", o.policy_rollouts, w);
    read_opt(p, "safety_horizon", o.safety_horizon, w);
    read_opt(p, "lambda", o.lambda, w);
    read_opt(p, "gamma", o.gamma, w);
    read_opt(p, "variance_scale", o.variance_scale, w);
    read_opt(p, "delta_u", o.delta_u, w);
    read_opt(p, "delta_nu", o.delta_nu, w);
    read_opt(p, "tau", o.tau, w);
    read_opt(p, "reciprocity", o.reciprocity, w);
    read_opt(p, "radius_buffer", o.radius_buffer, w);
    read_opt(p, "safety_constraints", o.safety_constraints, w);
    if (p.contains("cost")) {
      check_keys(p.at("cost"), detail::kCostKeys, w + ".cost");
      for (const auto& [k, v] : p.at("cost").items())
        if (!v.is_number()) throw ConfigError(w + ".cost: field '" + k + "' must be a number");
      o.cost = p.at("cost");
    }
  }
  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    check_keys(p, {"weights"}, "config.policy");
    read_opt(p, "weights", c.policy_weights, "config.policy");
  }
  if (j.contains("orca_dd")) {
    const auto& p = j.at("orca_dd");
    check_keys(p, {"tracking_offset", "goal_jitter_std", "preferred_speed", "tau"}, "config.orca_dd");
    read_opt(p, "tracking_offset", c.orca_dd.tracking_offset, "config.orca_dd");
    read_opt(p, "goal_jitter_std", c.orca_dd.goal_jitter_std, "config.orca_dd");
    c.orca_dd_speed_set = p.contains("preferred_speed");
    read_opt(p, "preferred_speed", c.orca_dd.preferred_speed, "config.orca_dd");
    read_opt(p, "tau", c.orca_dd.orca.tau, "config.orca_dd");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  return parse_config(j);
}

/// Preset for `algo` with the config's overrides applied.
inline AgentController build_controller(const ExperimentConfig& c, Algorithm algo,
                                        std::shared_ptr<const GuidancePolicy> policy) {
  AgentController ctl = make_controller(algo, c.sim.bounds, std::move(policy));
  if (ctl.uses_planner()) {
    const auto& o = c.planner;
    auto& p = ctl.planner;
    if (o.horizon) {
      p.mppi.horizon = *o.horizon;
      p.safety_horizon = *o.horizon;
    }
    if (o.rollouts) p.mppi.rollouts = *o.rollouts;
    if (o.policy_rollouts) p.mppi.policy_rollouts = *o.policy_rollouts;
    if (o.safety_horizon) p.safety_horizon = *o.safety_horizon;
    if (o.lambda) p.mppi.lambda = *o.lambda;
    if (o.gamma) p.mppi.gamma = *o.gamma;
    if (o.variance_scale) p.mppi.variance_scale = *o.variance_scale;
    if (o.delta_u) p.levels.delta_u = *o.delta_u;
    if (o.delta_nu) p.levels.delta_nu = *o.delta_nu;
    if (o.tau) p.orca.tau = *o.tau;
    if (o.reciprocity) p.orca.reciprocity = *o.reciprocity;
    if (o.radius_buffer) p.orca.radius_buffer = *o.radius_buffer;
    if (o.safety_constraints && algo != Algorithm::mppi) p.safety_constraints = *o.safety_constraints;
    for (const auto& [k, v] : o.cost.items()) {
      const double x = v.get<double>();
      if (k == "goal") p.cost.goal = x;
      else if (k == "proximity") p.cost.proximity = x;
      else if (k == "proximity_floor") p.cost.proximity_floor = x;
      else if (k == "collision") p.cost.collision = x;
      else if (k == "negative_velocity") p.cost.negative_velocity = x;
      else if (k == "terminal") p.cost.terminal = x;
    }
    p.dt = c.sim.dt;
    if (!p.policy) p.mppi.policy_rollouts = 0;
  } else {
    const bool speed_set = c.orca_dd_speed_set;
    const double v_max = ctl.orca_dd.preferred_speed;
    ctl.orca_dd = c.orca_dd;
    if (!speed_set) ctl.orca_dd.preferred_speed = v_max;
  }
  return ctl;
}

/// One row of a sweep: a concrete scenario size under one algorithm.
struct Cell {
  ScenarioKind kind{ScenarioKind::circle};
  int n{0};
  int grid_n{0};
  double diameter{0.0};
  double cell_size{0.0};
  double area{0.0};
  Algorithm algo{Algorithm::corl_mppi};

  std::uint64_t size_key() const { return static_cast<std::uint64_t>(n) + 1000ULL * static_cast<std::uint64_t>(grid_n); }
};

inline std::vector<Cell> expand_cells(const ExperimentConfig& c) {
  std::vector<Cell> cells;
  for (const auto& e : c.scenarios) {
    for (int size : e.sizes) {
      for (Algorithm a : c.algorithms) {
        Cell cell;
        cell.kind = e.kind;
        cell.algo = a;
        switch (e.kind) {
          case ScenarioKind::circle:
            cell.n = size;
            cell.diameter = e.diameter;
            break;
          case ScenarioKind::mesh:
            cell.grid_n = size;
            cell.n = e.mesh_n.value_or(size * size);
            cell.cell_size = e.cell_size;
            break;
          case ScenarioKind::random:
            cell.n = size;
            cell.area = e.area;
            break;
        }
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

/// Instance seeds depend on (seed_base, scenario kind, size, instance) only,
/// so every algorithm faces the same instances and the same noise.
inline std::uint64_t instance_seed(std::uint64_t seed_base, const Cell& cell, int instance) {
  return RngStream(seed_base)
      .substream(static_cast<std::uint64_t>(cell.kind))
      .substream(cell.size_key())
      .substream(static_cast<std::uint64_t>(instance))
      .key();
}

inline std::uint64_t run_seed(std::uint64_t instance_seed_value, int repetition) {
  return RngStream(instance_seed_value).substream(0x72756e00ULL + static_cast<std::uint64_t>(repetition)).key();
}

inline Scenario make_scenario(const Cell& cell, std::uint64_t seed) {
  switch (cell.kind) {
    case ScenarioKind::circle: return circle(cell.n, cell.diameter, seed);
    case ScenarioKind::mesh: return mesh(cell.grid_n, cell.cell_size, cell.n, seed);
    case ScenarioKind::random: return random_scene(cell.n, cell.area, seed);
  }
  throw std::logic_error("make_scenario: bad kind");
}

inline std::shared_ptr<const GuidancePolicy> load_policy(const ExperimentConfig& c) {
  if (!c.policy_weights) return nullptr;
  try {
    return std::make_shared<MlpPolicy>(load_weights(*c.policy_weights));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

/// Every check that can run without simulating. Returns the list of problems.
inline std::vector<std::string> validate_config(const ExperimentConfig& c) {
  std::vector<std::string> errors;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      errors.emplace_back(e.what());
    }
  };
  if (c.instances < 0) errors.emplace_back("config.instances must be >= 0");
  if (c.repetitions < 0) errors.emplace_back("config.repetitions must be >= 0");
  if (c.algorithms.empty()) errors.emplace_back("config.algorithms must not be empty");
  guard([&] { c.sim.validate(); });
  std::shared_ptr<const GuidancePolicy> policy;
  guard([&] { policy = load_policy(c); });
  for (Algorithm a : c.algorithms) {
    guard([&] {
      const auto ctl = build_controller(c, a, policy);
      try {
        if (ctl.uses_planner()) ctl.planner.validate();
        else ctl.orca_dd.validate();
      } catch (const std::exception& e) {
        throw ConfigError(std::string(to_string(a)) + ": " + e.what());
      }
    });
  }
  for (const auto& cell : expand_cells(c)) {
    guard([&] {
      if (cell.kind == ScenarioKind::random) {
        if (cell.n < 1) throw ConfigError("random: need at least one agent");
        if (!(cell.area > 0.0)) throw ConfigError("random: area must be positive");
        return;
      }
      (void)make_scenario(cell, 0);
    });
  }
  return errors;
}

struct RunRecord {
  int run{0};  // flat index within the document
  int instance{0};
  int repetition{0};
  std::uint64_t scenario_seed{0};
  std::uint64_t seed{0};
  RunOutcome outcome;
};

struct Aggregates {
  int runs{0};
  std::optional<double> success_rate;
  std::optional<double> pct_collision_terminated;
  std::optional<double> mean_makespan_s;
  int instances_fully_successful{0};
};

/// Minimal per-run view used by the aggregation rule.
struct RunSummary {
  int instance{0};
  RunStatus status{RunStatus::timeout};
  std::optional<double> makespan_s;
};

/// success_rate: fraction of runs that succeeded. pct_collision_terminated:
/// percentage of runs ended by a collision. mean_makespan_s: mean over
/// instances whose every run succeeded of that instance's mean makespan.
inline Aggregates aggregate(std::span<const RunSummary> runs) {
  Aggregates a;
  a.runs = static_cast<int>(runs.size());
  if (runs.empty()) return a;
  int ok = 0;
  int col = 0;
  std::map<int, std::vector<const RunSummary*>> by_instance;
  for (const auto& r : runs) {
    ok += r.status == RunStatus::success;
    col += r.status == RunStatus::collision;
    by_instance[r.instance].push_back(&r);
  }
  a.success_rate = static_cast<double>(ok) / a.runs;
  a.pct_collision_terminated = 100.0 * col / a.runs;
  double sum = 0.0;
  for (const auto& [inst, rs] : by_instance) {
    bool all = true;
    double s = 0.0;
    for (const auto* r : rs) {
      all = all && r->status == RunStatus::success;
      if (all) s += *r->makespan_s;
    }
    if (!all) continue;
    ++a.instances_fully_successful;
    sum += s / static_cast<double>(rs.size());
  }
  if (a.instances_fully_successful > 0) a.mean_makespan_s = sum / a.instances_fully_successful;
  return a;
}

using ojson = nlohmann::ordered_json;

namespace detail {

template <typename T>
ojson opt_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

inline RunStatus status_from_string(const std::string& s) {
  if (s == "success") return RunStatus::success;
  if (s == "collision") return RunStatus::collision;
  if (s == "timeout") return RunStatus::timeout;
  throw std::invalid_argument("unknown run status '" + s + "'");
}

}  // namespace detail

inline ojson aggregates_to_json(const Aggregates& a) {
  ojson j;
  j["runs"] = a.runs;
  j["success_rate"] = detail::opt_json(a.success_rate);
  j["pct_collision_terminated"] = detail::opt_json(a.pct_collision_terminated);
  j["mean_makespan_s"] = detail::opt_json(a.mean_makespan_s);
  j["instances_fully_successful"] = a.instances_fully_successful;
  return j;
}

inline ojson run_to_json(const RunRecord& r) {
  ojson j;
  j["run"] = r.run;
  j["instance"] = r.instance;
  j["repetition"] = r.repetition;
  j["scenario_seed"] = r.scenario_seed;
  j["seed"] = r.seed;
  j["status"] = to_string(r.outcome.status);
  j["makespan_s"] = detail::opt_json(r.outcome.makespan_s);
  ojson arr = ojson::array();
  for (const auto& s : r.outcome.arrival_steps) arr.push_back(detail::opt_json(s));
  j["arrival_steps"] = arr;
  j["min_pairwise_dist"] = std::isfinite(r.outcome.min_pairwise_dist) ? ojson(r.outcome.min_pairwise_dist) : ojson(nullptr);
  j["steps_executed"] = r.outcome.steps_executed;
  return j;
}

inline ojson cell_key_json(const Cell& c) {
  ojson j;
  j["scenario"] = to_string(c.kind);
  j["n"] = c.n;
  j["algo"] = to_string(c.algo);
  switch (c.kind) {
    case ScenarioKind::circle: j["diameter"] = c.diameter; break;
    case ScenarioKind::mesh:
      j["grid_n"] = c.grid_n;
      j["cell_size"] = c.cell_size;
      break;
    case ScenarioKind::random: j["area"] = c.area; break;
  }
  return j;
}

struct ExperimentResult {
  ojson metrics;
  std::vector<std::vector<TrajectoryRecord>> trajectories;  // per flat run index, if requested
};

/// Runs every (cell, instance, repetition) on a pool of `jobs` workers.
inline ExperimentResult execute(const ExperimentConfig& c, std::span<const Cell> cells, int jobs,
                                bool keep_trajectories) {
  const auto policy = load_policy(c);
  struct Job {
    std::size_t cell;
    int instance;
    int repetition;
  };
  std::vector<Job> jobs_list;
  for (std::size_t ci = 0; ci < cells.size(); ++ci)
    for (int i = 0; i < c.instances; ++i)
      for (int r = 0; r < c.repetitions; ++r) jobs_list.push_back({ci, i, r});

  std::vector<AgentController> controllers;
  for (const auto& cell : cells) controllers.push_back(build_controller(c, cell.algo, policy));

  std::vector<RunRecord> records(jobs_list.size());
  ExperimentResult res;
  if (keep_trajectories) res.trajectories.resize(jobs_list.size());
  SimConfig sim = c.sim;
  sim.jobs = 1;
  parallel_for(jobs_list.size(), jobs, [&](std::size_t k) {
    const auto& jb = jobs_list[k];
    const Cell& cell = cells[jb.cell];
    RunRecord& rec = records[k];
    rec.run = static_cast<int>(k);
    rec.instance = jb.instance;
    rec.repetition = jb.repetition;
    rec.scenario_seed = instance_seed(c.seed_base, cell, jb.instance);
    rec.seed = run_seed(rec.scenario_seed, jb.repetition);
    const Scenario sc = make_scenario(cell, rec.scenario_seed);
    rec.outcome = run(sc, controllers[jb.cell], sim, rec.seed, keep_trajectories ? &res.trajectories[k] : nullptr);
  });

  ojson doc;
  doc["format_version"] = 1;
  doc["seed_base"] = c.seed_base;
  doc["instances"] = c.instances;
  doc["repetitions"] = c.repetitions;
  doc["config"] = ojson::parse(c.source.dump());
  doc["cells"] = ojson::array();
  std::size_t k = 0;
  for (const auto& cell : cells) {
    ojson cj = cell_key_json(cell);
    ojson runs = ojson::array();
    std::vector<RunSummary> summaries;
    for (int i = 0; i < c.instances * c.repetitions; ++i, ++k) {
      runs.push_back(run_to_json(records[k]));
      summaries.push_back({records[k].instance, records[k].outcome.status, records[k].outcome.makespan_s});
    }
    cj["aggregates"] = aggregates_to_json(aggregate(summaries));
    cj["runs"] = std::move(runs);
    doc["cells"].push_back(std::move(cj));
  }
  res.metrics = std::move(doc);
  return res;
}

/// Recomputes every cell's aggregates from its run records. Returns one
/// message per mismatching cell (empty when the document is consistent).
inline std::vector<std::string> verify_metrics(const ojson& doc) {
  std::vector<std::string> problems;
  try {
    const auto& cells = doc.at("cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& cj = cells[i];
      std::vector<RunSummary> rs;
      for (const auto& r : cj.at("runs")) {
        RunSummary s;
        s.instance = r.at("instance").get<int>();
        s.status = detail::status_from_string(r.at("status").get<std::string>());
        if (!r.at("makespan_s").is_null()) s.makespan_s = r.at("makespan_s").get<double>();
        if (s.status == RunStatus::success && !s.makespan_s)
          problems.push_back("cells[" + std::to_string(i) + "]: successful run without makespan");
        rs.push_back(s);
      }
      const ojson recomputed = aggregates_to_json(aggregate(rs));
      if (recomputed != cj.at("aggregates"))
        problems.push_back("cells[" + std::to_string(i) + "]: aggregates " + cj.at("aggregates").dump() +
                           " differ from recomputed " + recomputed.dump());
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("malformed metrics document: ") + e.what());
  }
  return problems;
}

inline std::string render_runs_csv(const ojson& doc) {
  std::ostringstream os;
  os << "run,scenario,n,algo,instance,repetition,seed,status,makespan_s,steps_executed,min_pairwise_dist\n";
  for (const auto& cj : doc.at("cells")) {
    for (const auto& r : cj.at("runs")) {
      os << r.at("run").get<int>() << ',' << cj.at("scenario").get<std::string>() << ',' << cj.at("n").get<int>()
         << ',' << cj.at("algo").get<std::string>() << ',' << r.at("instance").get<int>() << ','
         << r.at("repetition").get<int>() << ',' << r.at("seed").get<std::uint64_t>() << ','
         << r.at("status").get<std::string>() << ',' << (r.at("makespan_s").is_null() ? "" : r.at("makespan_s").dump())
         << ',' << r.at("steps_executed").get<int>() << ','
         << (r.at("min_pairwise_dist").is_null() ? "" : r.at("min_pairwise_dist").dump()) << '\n';
    }
  }
  return os.str();
}

inline std::string render_trajectories(std::span<const std::vector<TrajectoryRecord>> trajs) {
  std::ostringstream os;
  os.precision(17);
  write_trajectory_header(os);
  for (std::size_t k = 0; k < trajs.size(); ++k) write_trajectory(os, static_cast<int>(k), trajs[k]);
  return os.str();
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed write never leaves a partial file behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot move output into '" + path + "'");
  }
}

inline std::string dump_metrics(const ojson& doc) { return doc.dump(2) + "\n"; }

}  // namespace corl
