#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "corl/dynamics.hpp"
#include "corl/vec2.hpp"

namespace corl {

/// A neighbor as seen from the planning agent.
struct Neighbor {
  Vec2 rel_pos;   // p_j - p_i
  Vec2 velocity;  // world frame
  double radius{0.3};
};

/// Linear constraint a^T u <= b on the control (v, w).
struct HalfPlaneConstraint {
  std::array<double, 2> a{0.0, 0.0};
  double b{0.0};

  double slack(const ControlInput& u) const { return b - (a[0] * u.v + a[1] * u.w); }
};

/// n^T v <= b in world-velocity space, with n a unit vector.
struct VelocityHalfPlane {
  Vec2 n;
  double b{0.0};

  bool contains(const Vec2& v, double tol = 0.0) const { return dot(n, v) <= b + tol; }
};

struct OrcaParams {
  double tau{2.0};            // avoidance horizon [s]
  double reciprocity{0.5};    // share of the avoidance effort taken by this agent
  double radius_buffer{0.01}; // added to each agent's radius [m]

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("OrcaParams: tau must be positive");
    if (!(reciprocity > 0.0 && reciprocity <= 1.0))
      throw std::invalid_argument("OrcaParams: reciprocity must lie in (0, 1]");
    if (radius_buffer < 0.0) throw std::invalid_argument("OrcaParams: radius_buffer must be >= 0");
  }
};

/// ORCA half-plane for one neighbor. Follows the usual truncated-cone
/// construction: find the smallest change u of the relative velocity that
/// leaves the velocity obstacle, take `reciprocity` of it, and bound the
/// agent's velocity by the plane through v_self + reciprocity * u with
/// normal -u/|u|. Overlapping pairs use the one-step separation branch.
inline VelocityHalfPlane velocity_halfplane(double self_radius, const Vec2& self_vel, const Neighbor& nb,
                                            const OrcaParams& params, double dt) {
  const double combined = self_radius + nb.radius + 2.0 * params.radius_buffer;
  if (!(combined > 0.0)) throw std::invalid_argument("velocity_halfplane: combined radius must be positive");

  const Vec2 rel_pos = nb.rel_pos;
  const Vec2 rel_vel = self_vel - nb.velocity;
  const double dist_sq = norm_sq(rel_pos);
  const double r_sq = combined * combined;
  const double inv_tau = 1.0 / params.tau;

  Vec2 direction;  // along the boundary line; feasible side is to its left
  Vec2 u;

  if (dist_sq > r_sq) {
    const Vec2 w = rel_vel - inv_tau * rel_pos;
    const double w_len_sq = norm_sq(w);
    const double dot1 = dot(w, rel_pos);
    if (dot1 < 0.0 && dot1 * dot1 > r_sq * w_len_sq) {
      // cut-off circle
      const double w_len = std::sqrt(w_len_sq);
      const Vec2 unit_w = w / w_len;
      direction = {unit_w.y, -unit_w.x};
      u = (combined * inv_tau - w_len) * unit_w;
    } else {
      const double leg = std::sqrt(dist_sq - r_sq);
      if (det(rel_pos, w) > 0.0) {
        direction = Vec2{rel_pos.x * leg - rel_pos.y * combined, rel_pos.x * combined + rel_pos.y * leg} / dist_sq;
      } else {
        direction = -Vec2{rel_pos.x * leg + rel_pos.y * combined, -rel_pos.x * combined + rel_pos.y * leg} / dist_sq;
      }
      u = dot(rel_vel, direction) * direction - rel_vel;
    }
  } else {
    const double inv_dt = 1.0 / dt;
    const Vec2 w = rel_vel - inv_dt * rel_pos;
    double w_len = norm(w);
    Vec2 unit_w;
    if (w_len > 0.0) {
      unit_w = w / w_len;
    } else {
      // coincident centers with zero relative motion: separate along -x
      unit_w = {-1.0, 0.0};
      w_len = 0.0;
    }
    direction = {unit_w.y, -unit_w.x};
    u = (combined * inv_dt - w_len) * unit_w;
  }

  const Vec2 point = self_vel + params.reciprocity * u;
  // Feasible: det(direction, v - point) >= 0  <=>  n^T v <= n^T point, n = (d.y, -d.x).
  const Vec2 n{direction.y, -direction.x};
  const double len = norm(n);
  const Vec2 unit_n = n / len;
  return {unit_n, dot(unit_n, point)};
}

/// Heading-frozen reduction to control space: v_world = v * (cos th, sin th),
/// so n^T v_world <= b becomes (n . heading) v <= b, with w unconstrained.
inline HalfPlaneConstraint to_control_constraint(const VelocityHalfPlane& hp, const AgentState& self) {
  const double c = std::cos(self.theta);
  const double s = std::sin(self.theta);
  return {{hp.n.x * c + hp.n.y * s, 0.0}, hp.b};
}

inline constexpr double kVacuousCoefficient = 1e-12;

/// One control constraint per neighbor; constraints whose v coefficient
/// vanishes (heading orthogonal to the normal) are dropped.
inline std::vector<HalfPlaneConstraint> constraints_for_agent(const AgentState& self, double self_radius,
                                                              const Vec2& self_vel,
                                                              std::span<const Neighbor> neighbors,
                                                              const OrcaParams& params, double dt) {
  std::vector<HalfPlaneConstraint> out;
  out.reserve(neighbors.size());
  for (const auto& nb : neighbors) {
    const auto hp = velocity_halfplane(self_radius, self_vel, nb, params, dt);
    auto c = to_control_constraint(hp, self);
    if (std::abs(c.a[0]) < kVacuousCoefficient) continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace corl
