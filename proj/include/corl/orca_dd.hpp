#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "corl/dynamics.hpp"
#include "corl/orca.hpp"
#include "corl/planner.hpp"
#include "corl/rng.hpp"
#include "corl/vec2.hpp"

namespace corl {

struct OrcaDDConfig {
  double tracking_offset{0.3};   // d; effective radius is r + d + radius_buffer
  double goal_jitter_std{0.3};
  double preferred_speed{1.0};
  OrcaParams orca;

  void validate() const {
    if (!(tracking_offset > 0.0)) throw std::invalid_argument("OrcaDDConfig: tracking_offset must be positive");
    if (goal_jitter_std < 0.0) throw std::invalid_argument("OrcaDDConfig: goal_jitter_std must be >= 0");
    if (!(preferred_speed > 0.0)) throw std::invalid_argument("OrcaDDConfig: preferred_speed must be positive");
    orca.validate();
  }
};

/// Half-plane in holonomic velocity space. Feasible velocities lie to the
/// left of `direction` through `point`.
struct OrcaLine {
  Vec2 point;
  Vec2 direction;

  static OrcaLine from(const VelocityHalfPlane& hp) {
    // n^T v <= b  with n = (d.y, -d.x)
    const Vec2 d{-hp.n.y, hp.n.x};
    return {hp.n * hp.b, d};
  }

  double violation(const Vec2& v) const { return det(direction, point - v); }
};

namespace orca_lp {

inline constexpr double kEps = 1e-9;

inline bool on_line(std::span<const OrcaLine> lines, std::size_t line_no, double radius, const Vec2& opt,
                    bool direction_opt, Vec2& result) {
  const auto& ln = lines[line_no];
  const double dp = dot(ln.point, ln.direction);
  const double disc = dp * dp + radius * radius - norm_sq(ln.point);
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t_left = -dp - sq;
  double t_right = -dp + sq;
  for (std::size_t i = 0; i < line_no; ++i) {
    const double denom = det(ln.direction, lines[i].direction);
    const double numer = det(lines[i].direction, ln.point - lines[i].point);
    if (std::abs(denom) <= kEps) {
      if (numer < 0.0) return false;
      continue;
    }
    const double t = numer / denom;
    if (denom >= 0.0) t_right = std::min(t_right, t);
    else t_left = std::max(t_left, t);
    if (t_left > t_right) return false;
  }
  if (direction_opt) {
    result = dot(opt, ln.direction) > 0.0 ? ln.point + t_right * ln.direction : ln.point + t_left * ln.direction;
  } else {
    const double t = dot(ln.direction, opt - ln.point);
    result = ln.point + std::clamp(t, t_left, t_right) * ln.direction;
  }
  return true;
}

// Returns lines.size() on success, else the index of the first line that
// could not be satisfied.
inline std::size_t incremental(std::span<const OrcaLine> lines, double radius, const Vec2& opt, bool direction_opt,
                               Vec2& result) {
  if (direction_opt) result = opt * radius;
  else if (norm_sq(opt) > radius * radius) result = opt / norm(opt) * radius;
  else result = opt;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].violation(result) > 0.0) {
      const Vec2 prev = result;
      if (!on_line(lines, i, radius, opt, direction_opt, result)) {
        result = prev;
        return i;
      }
    }
  }
  return lines.size();
}

// Minimizes the largest violation over lines [begin, n) (least-violation
// fallback for an empty intersection).
inline void least_violation(std::span<const OrcaLine> lines, std::size_t begin, double radius, Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (lines[i].violation(result) <= distance) continue;
    std::vector<OrcaLine> proj;
    for (std::size_t j = 0; j < i; ++j) {
      OrcaLine l;
      const double d = det(lines[i].direction, lines[j].direction);
      if (std::abs(d) <= kEps) {
        if (dot(lines[i].direction, lines[j].direction) > 0.0) continue;
        l.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        l.point = lines[i].point + (det(lines[j].direction, lines[i].point - lines[j].point) / d) * lines[i].direction;
      }
      const Vec2 dir = lines[j].direction - lines[i].direction;
      l.direction = dir / norm(dir);
      proj.push_back(l);
    }
    const Vec2 prev = result;
    if (incremental(proj, radius, Vec2{-lines[i].direction.y, lines[i].direction.x}, true, result) < proj.size())
      result = prev;
    distance = lines[i].violation(result);
  }
}

}  // namespace orca_lp

struct VelocityLpResult {
  Vec2 velocity;
  bool feasible{true};
};

/// Velocity closest to `preferred` inside the disk |v| <= max_speed and all
/// half-planes; least-violation velocity when the intersection is empty.
inline VelocityLpResult solve_velocity_lp(std::span<const OrcaLine> lines, double max_speed, const Vec2& preferred) {
  VelocityLpResult r;
  const std::size_t fail = orca_lp::incremental(lines, max_speed, preferred, false, r.velocity);
  if (fail < lines.size()) {
    r.feasible = false;
    orca_lp::least_violation(lines, fail, max_speed, r.velocity);
  }
  return r;
}

/// Holonomic velocity of the tracking point -> (v, w), clamped.
inline ControlInput tracking_point_control(const Vec2& vel, double theta, double offset, const ControlBounds& b) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return b.clamp({vel.x * c + vel.y * s, (-vel.x * s + vel.y * c) / offset});
}

/// ORCA on disks enlarged by the tracking offset, driven through the
/// offset-point feedback map. `gauss` supplies the goal-direction jitter.
inline ControlInput orca_dd_command(const AgentState& self, double self_radius, const Vec2& goal,
                                    std::span<const NeighborTrack> tracks, const OrcaDDConfig& cfg,
                                    const ControlBounds& bounds, double dt, NormalSampler& gauss) {
  const Vec2 to_goal = goal - self.position();
  const double dist = norm(to_goal);
  Vec2 dir = dist > 0.0 ? to_goal / dist : Vec2{};
  dir += Vec2{cfg.goal_jitter_std * gauss(), cfg.goal_jitter_std * gauss()};
  const double dir_len = norm(dir);
  // full speed until within 1 m of the goal, then proportional
  const Vec2 preferred =
      dir_len > 0.0 ? dir / dir_len * (cfg.preferred_speed * std::min(1.0, dist)) : Vec2{};

  const double enlarged = self_radius + cfg.tracking_offset;
  std::vector<OrcaLine> lines;
  lines.reserve(tracks.size());
  for (const auto& tr : tracks) {
    const Neighbor nb{tr.position - self.position(), tr.velocity, tr.radius + cfg.tracking_offset};
    lines.push_back(OrcaLine::from(velocity_halfplane(enlarged, self.velocity(), nb, cfg.orca, dt)));
  }
  const auto sol = solve_velocity_lp(lines, cfg.preferred_speed, preferred);
  return tracking_point_control(sol.velocity, self.theta, cfg.tracking_offset, bounds);
}

}  // namespace corl
