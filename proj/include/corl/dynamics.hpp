#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "corl/rng.hpp"
#include "corl/vec2.hpp"

namespace corl {

/// Differential-drive pose plus the world-frame velocity realized over the
/// last step (zero before the first step).
struct AgentState {
  double px{0.0};
  double py{0.0};
  double theta{0.0};
  double vx{0.0};
  double vy{0.0};

  Vec2 position() const { return {px, py}; }
  Vec2 velocity() const { return {vx, vy}; }
  Vec2 heading() const { return {std::cos(theta), std::sin(theta)}; }

  bool operator==(const AgentState&) const = default;
};

struct ControlInput {
  double v{0.0};  // m/s
  double w{0.0};  // rad/s

  double operator[](int k) const { return k == 0 ? v : w; }
  double& operator[](int k) { return k == 0 ? v : w; }

  bool operator==(const ControlInput&) const = default;
};

struct ControlBounds {
  double v_min{-1.0};
  double v_max{1.0};
  double w_min{-2.0};
  double w_max{2.0};

  double lo(int k) const { return k == 0 ? v_min : w_min; }
  double hi(int k) const { return k == 0 ? v_max : w_max; }

  void validate() const {
    if (!(v_min < v_max) || !(w_min < w_max))
      throw std::invalid_argument("ControlBounds: require v_min < v_max and w_min < w_max");
  }

  ControlInput clamp(const ControlInput& u) const {
    return {std::clamp(u.v, v_min, v_max), std::clamp(u.w, w_min, w_max)};
  }
};

/// Actuation noise, Sigma = diag(sigma_v^2, sigma_w^2).
struct NoiseModel {
  double sigma_v{0.1};
  double sigma_w{0.2};

  double sigma(int k) const { return k == 0 ? sigma_v : sigma_w; }
  double variance(int k) const { return sigma(k) * sigma(k); }

  void validate() const {
    if (!(sigma_v > 0.0) || !(sigma_w > 0.0))
      throw std::invalid_argument("NoiseModel: standard deviations must be strictly positive");
  }
};

/// x' = F(x) + G(x) u with F(x) = x and G(x) = dt * [[cos th, 0], [sin th, 0], [0, 1]].
/// Position uses the heading at the start of the step.
struct AffineTerms {
  std::array<double, 3> f;
  std::array<std::array<double, 2>, 3> g;

  std::array<double, 3> apply(const ControlInput& u) const {
    std::array<double, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = f[i] + g[i][0] * u.v + g[i][1] * u.w;
    return out;
  }
};

inline AffineTerms affine_terms(const AgentState& s, double dt) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  return {{s.px, s.py, s.theta}, {{{dt * c, 0.0}, {dt * sn, 0.0}, {0.0, dt}}}};
}

inline AgentState step(const AgentState& s, const ControlInput& u, double dt) {
  const auto x = affine_terms(s, dt).apply(u);
  AgentState out;
  out.px = x[0];
  out.py = x[1];
  out.theta = wrap_angle(x[2]);
  out.vx = (out.px - s.px) / dt;
  out.vy = (out.py - s.py) / dt;
  return out;
}

/// Componentwise clamp(u + eps), eps ~ N(0, Sigma). A zero sigma component
/// is allowed here (deterministic execution in tests).
inline ControlInput perturb_and_clamp(const ControlInput& u, const NoiseModel& noise,
                                      const ControlBounds& bounds, NormalSampler& gauss) {
  ControlInput out{u.v + noise.sigma_v * gauss(), u.w + noise.sigma_w * gauss()};
  return bounds.clamp(out);
}

}  // namespace corl
