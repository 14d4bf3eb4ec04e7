#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "corl/dynamics.hpp"
#include "corl/rng.hpp"
#include "corl/vec2.hpp"

namespace corl {

enum class ScenarioKind { circle, mesh, random };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::circle: return "circle";
    case ScenarioKind::mesh: return "mesh";
    case ScenarioKind::random: return "random";
  }
  return "?";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "circle") return ScenarioKind::circle;
  if (s == "mesh") return ScenarioKind::mesh;
  if (s == "random") return ScenarioKind::random;
  throw std::invalid_argument("unknown scenario kind '" + s + "' (expected circle, mesh or random)");
}

struct ScenarioAgent {
  AgentState start;
  Vec2 goal;
  double radius{0.3};
};

struct Scenario {
  ScenarioKind kind{ScenarioKind::circle};
  int n{0};
  double diameter{0.0};   // circle
  int grid_n{0};          // mesh
  double cell_size{0.0};  // mesh
  double area{0.0};       // random
  std::uint64_t seed{0};
  std::vector<ScenarioAgent> agents;
};

inline constexpr double kDefaultRadius = 0.3;

/// Agents evenly spaced on a circle, each heading at its antipodal goal.
inline Scenario circle(int n, double diameter, std::uint64_t seed, double radius = kDefaultRadius) {
  if (n < 1) throw std::invalid_argument("circle: need at least one agent");
  if (!(n * 2.0 * radius < std::numbers::pi * diameter))
    throw std::invalid_argument("circle: " + std::to_string(n) + " agents do not fit on a circle of diameter " +
                                std::to_string(diameter));
  Scenario sc;
  sc.kind = ScenarioKind::circle;
  sc.n = n;
  sc.diameter = diameter;
  sc.seed = seed;
  const double r = diameter / 2.0;
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    ScenarioAgent ag;
    ag.start.px = r * std::cos(a);
    ag.start.py = r * std::sin(a);
    ag.goal = {-ag.start.px, -ag.start.py};
    ag.start.theta = wrap_angle(std::atan2(ag.goal.y - ag.start.py, ag.goal.x - ag.start.px));
    ag.radius = radius;
    sc.agents.push_back(ag);
  }
  return sc;
}

namespace detail {

// Fisher-Yates with a fixed, portable index draw.
inline void shuffle(std::vector<int>& v, SplitMix64& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(eng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace detail

/// Agents on the first n cell centres of a grid_n x grid_n lattice centred
/// at the origin; goals are a seeded permutation of the occupied cells,
/// redrawn (up to 100 times) until no agent keeps its own cell.
inline Scenario mesh(int grid_n, double cell_size, int n, std::uint64_t seed, double radius = kDefaultRadius) {
  if (grid_n < 1) throw std::invalid_argument("mesh: grid_n must be >= 1");
  if (n < 1 || n > grid_n * grid_n)
    throw std::invalid_argument("mesh: " + std::to_string(n) + " agents do not fit in a " + std::to_string(grid_n) +
                                "x" + std::to_string(grid_n) + " grid");
  if (!(cell_size > 0.0)) throw std::invalid_argument("mesh: cell_size must be positive");
  Scenario sc;
  sc.kind = ScenarioKind::mesh;
  sc.n = n;
  sc.grid_n = grid_n;
  sc.cell_size = cell_size;
  sc.seed = seed;

  const double offset = (grid_n - 1) / 2.0;
  auto cell = [&](int idx) {
    const int row = idx / grid_n;
    const int col = idx % grid_n;
    return Vec2{(col - offset) * cell_size, (row - offset) * cell_size};
  };

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  SplitMix64 eng(RngStream(seed).substream(0x6d657368).key());
  for (int attempt = 0; attempt < 100; ++attempt) {
    detail::shuffle(perm, eng);
    bool fixed_point = false;
    for (int i = 0; i < n; ++i) fixed_point |= perm[static_cast<std::size_t>(i)] == i;
    if (!fixed_point || n == 1) break;
  }

  for (int i = 0; i < n; ++i) {
    ScenarioAgent ag;
    const Vec2 s = cell(i);
    ag.start.px = s.x;
    ag.start.py = s.y;
    ag.goal = cell(perm[static_cast<std::size_t>(i)]);
    ag.radius = radius;
    sc.agents.push_back(ag);
  }
  return sc;
}

/// Uniform starts (pairwise >= 2r + 0.1 m), independent uniform goals and
/// headings inside a square of side `area` centred at the origin.
inline Scenario random_scene(int n, double area, std::uint64_t seed, double radius = kDefaultRadius) {
  if (n < 1) throw std::invalid_argument("random_scene: need at least one agent");
  if (!(area > 0.0)) throw std::invalid_argument("random_scene: area must be positive");
  Scenario sc;
  sc.kind = ScenarioKind::random;
  sc.n = n;
  sc.area = area;
  sc.seed = seed;
  NormalSampler rng(RngStream(seed).substream(0x72616e64));
  const double min_gap = 2.0 * radius + 0.1;
  auto uniform_point = [&] { return Vec2{(rng.uniform() - 0.5) * area, (rng.uniform() - 0.5) * area}; };

  long rejections = 0;
  std::vector<Vec2> starts;
  while (static_cast<int>(starts.size()) < n) {
    const Vec2 p = uniform_point();
    bool ok = true;
    for (const auto& q : starts) ok = ok && norm(p - q) >= min_gap;
    if (ok) {
      starts.push_back(p);
    } else if (++rejections >= 100000) {
      throw std::runtime_error("random_scene: could not place " + std::to_string(n) + " agents in a " +
                               std::to_string(area) + " m square (area too crowded)");
    }
  }
  for (int i = 0; i < n; ++i) {
    ScenarioAgent ag;
    ag.start.px = starts[static_cast<std::size_t>(i)].x;
    ag.start.py = starts[static_cast<std::size_t>(i)].y;
    ag.goal = uniform_point();
    ag.start.theta = std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform();
    ag.radius = radius;
    sc.agents.push_back(ag);
  }
  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["kind"] = to_string(sc.kind);
  j["n"] = sc.n;
  j["seed"] = sc.seed;
  if (sc.kind == ScenarioKind::circle) j["diameter"] = sc.diameter;
  if (sc.kind == ScenarioKind::mesh) {
    j["grid_n"] = sc.grid_n;
    j["cell_size"] = sc.cell_size;
  }
  if (sc.kind == ScenarioKind::random) j["area"] = sc.area;
  j["agents"] = nlohmann::json::array();
  for (const auto& a : sc.agents) {
    j["agents"].push_back({{"start", {a.start.px, a.start.py, a.start.theta}},
                           {"goal", {a.goal.x, a.goal.y}},
                           {"radius", a.radius}});
  }
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario sc;
  try {
    sc.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    sc.n = j.at("n").get<int>();
    sc.seed = j.value("seed", std::uint64_t{0});
    sc.diameter = j.value("diameter", 0.0);
    sc.grid_n = j.value("grid_n", 0);
    sc.cell_size = j.value("cell_size", 0.0);
    sc.area = j.value("area", 0.0);
    for (const auto& ja : j.at("agents")) {
      ScenarioAgent a;
      const auto s = ja.at("start").get<std::vector<double>>();
      const auto g = ja.at("goal").get<std::vector<double>>();
      if (s.size() != 3 || g.size() != 2) throw std::invalid_argument("scenario: start needs 3 and goal 2 numbers");
      a.start.px = s[0];
      a.start.py = s[1];
      a.start.theta = s[2];
      a.goal = {g[0], g[1]};
      a.radius = ja.at("radius").get<double>();
      sc.agents.push_back(a);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  if (static_cast<int>(sc.agents.size()) != sc.n)
    throw std::invalid_argument("scenario: agent count does not match n");
  return sc;
}

}  // namespace corl
