#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "corl/dynamics.hpp"
#include "corl/normal.hpp"
#include "corl/orca.hpp"
#include "corl/simplex.hpp"

namespace corl {

/// Diagonal Gaussian over (v, w), parameterized by per-coordinate standard
/// deviation.
struct GaussianControl {
  ControlInput mean;
  std::array<double, 2> std{0.0, 0.0};

  bool operator==(const GaussianControl&) const = default;
};

struct SafetyLevels {
  double delta_u{0.95};   // sampled control satisfies a constraint
  double delta_nu{0.95};  // executed (noisy) control satisfies it

  void validate() const {
    if (!(delta_u > 0.5 && delta_u < 1.0) || !(delta_nu > 0.5 && delta_nu < 1.0))
      throw std::invalid_argument("SafetyLevels: probabilities must lie in (0.5, 1)");
  }
};

enum class ProjectionStatus { exact, relaxed_variance, infeasible_fallback };

inline const char* to_string(ProjectionStatus s) {
  switch (s) {
    case ProjectionStatus::exact: return "exact";
    case ProjectionStatus::relaxed_variance: return "relaxed_variance";
    case ProjectionStatus::infeasible_fallback: return "infeasible_fallback";
  }
  return "?";
}

struct ProjectionResult {
  GaussianControl adjusted;
  ProjectionStatus status{ProjectionStatus::exact};
  double max_violation{0.0};
};

/// P(a^T x > b) for x ~ N(mean, diag(std^2)).
inline double violation_probability(const GaussianControl& g, const HalfPlaneConstraint& c) {
  const double mu = c.a[0] * g.mean.v + c.a[1] * g.mean.w;
  const double var = c.a[0] * c.a[0] * g.std[0] * g.std[0] + c.a[1] * c.a[1] * g.std[1] * g.std[1];
  if (var <= 0.0) return mu > c.b ? 1.0 : 0.0;
  const double z = (c.b - mu) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

namespace detail {

// Right-hand side of a safety row after the execution-noise margin.
inline double tightened_rhs(const HalfPlaneConstraint& c, const NoiseModel& noise, double z_nu) {
  const double s2 = c.a[0] * c.a[0] * noise.variance(0) + c.a[1] * c.a[1] * noise.variance(1);
  return c.b - z_nu * std::sqrt(s2);
}

// Largest violation of the projected problem's rows at (mean, std).
inline double projection_violation(const GaussianControl& g, std::span<const HalfPlaneConstraint> cs,
                                   const NoiseModel& noise, const ControlBounds& bounds, double z_u,
                                   double z_nu) {
  double worst = 0.0;
  for (const auto& c : cs) {
    const double lhs = c.a[0] * g.mean.v + c.a[1] * g.mean.w +
                       z_u * (std::abs(c.a[0]) * g.std[0] + std::abs(c.a[1]) * g.std[1]);
    worst = std::max(worst, lhs - tightened_rhs(c, noise, z_nu));
  }
  for (int k = 0; k < 2; ++k) {
    worst = std::max(worst, g.mean[k] + z_u * g.std[k] - bounds.hi(k));
    worst = std::max(worst, bounds.lo(k) - (g.mean[k] - z_u * g.std[k]));
    worst = std::max(worst, -g.std[k]);
  }
  return worst;
}

}  // namespace detail

/// Moves (mean, std) as little as possible in L1 so that samples satisfy
/// every half-plane with probability >= delta_u after an execution-noise
/// margin of Phi^-1(delta_nu) * sqrt(a^T Sigma a), and stay inside the
/// control bounds with probability >= delta_u per side.
///
/// Working in standard deviations keeps every row linear, so the problem is
/// an LP. Rows with a[1] != 0 use |a0| s0 + |a1| s1 >= sqrt(a0^2 s0^2 + a1^2 s1^2),
/// which is conservative.
///
/// When no (mean, std) pair is feasible, std is pinned to zero and the mean
/// minimizing the largest row violation is returned (ties broken by distance
/// to the nominal mean).
inline ProjectionResult project(const GaussianControl& nominal, const NoiseModel& exec_noise,
                                std::span<const HalfPlaneConstraint> constraints,
                                const ControlBounds& bounds, const SafetyLevels& levels) {
  using Sense = LinearProgram::Sense;
  const double z_u = inv_normal_cdf(levels.delta_u);
  const double z_nu = inv_normal_cdf(levels.delta_nu);
  const DenseSimplex solver;

  const double lo[2] = {bounds.v_min, bounds.w_min};
  const double span[2] = {bounds.v_max - bounds.v_min, bounds.w_max - bounds.w_min};

  // Variables: mean offsets y_k = u_k - lo_k (0, 1), std s_k (2, 3),
  // epigraph terms for |u - u_nom| (4, 5) and |s - s_nom| (6, 7).
  LinearProgram lp(8);
  for (int j = 4; j < 8; ++j) lp.set_cost(j, 1.0);
  auto row = [] { return std::vector<double>(8, 0.0); };
  for (int k = 0; k < 2; ++k) {
    const double u_nom = nominal.mean[k] - lo[k];
    auto r = row();
    r[k] = 1.0;
    r[4 + k] = -1.0;
    lp.add_row(r, Sense::le, u_nom);
    r[k] = -1.0;
    lp.add_row(r, Sense::le, -u_nom);

    r = row();
    r[2 + k] = 1.0;
    r[6 + k] = -1.0;
    lp.add_row(r, Sense::le, nominal.std[k]);
    r[2 + k] = -1.0;
    lp.add_row(r, Sense::le, -nominal.std[k]);

    r = row();
    r[k] = 1.0;
    r[2 + k] = z_u;
    lp.add_row(r, Sense::le, span[k]);
    r[2 + k] = -z_u;
    lp.add_row(r, Sense::ge, 0.0);
  }
  for (const auto& c : constraints) {
    auto r = row();
    r[0] = c.a[0];
    r[1] = c.a[1];
    r[2] = z_u * std::abs(c.a[0]);
    r[3] = z_u * std::abs(c.a[1]);
    lp.add_row(r, Sense::le, detail::tightened_rhs(c, exec_noise, z_nu) - c.a[0] * lo[0] - c.a[1] * lo[1]);
  }

  ProjectionResult out;
  const LpSolution sol = solver.solve(lp);
  if (sol.status == LpSolution::Status::optimal) {
    out.adjusted.mean = {lo[0] + sol.x[0], lo[1] + sol.x[1]};
    out.adjusted.std = {sol.x[2], sol.x[3]};
    // Snap back to the nominal when the LP moved nothing (avoids ulp drift
    // through the lo + y substitution).
    for (int k = 0; k < 2; ++k) {
      if (std::abs(out.adjusted.mean[k] - nominal.mean[k]) <= 1e-13) out.adjusted.mean[k] = nominal.mean[k];
      if (std::abs(out.adjusted.std[k] - nominal.std[k]) <= 1e-13) out.adjusted.std[k] = nominal.std[k];
    }
    out.max_violation = std::max(
        0.0, detail::projection_violation(out.adjusted, constraints, exec_noise, bounds, z_u, z_nu));
    out.status = out.adjusted.std == nominal.std ? ProjectionStatus::exact
                                                 : ProjectionStatus::relaxed_variance;
    return out;
  }

  // Least-violation fallback at zero spread: variables y0, y1, t, d0, d1.
  auto fallback_lp = [&](double t_cap, bool minimize_t) {
    LinearProgram f(5);
    if (minimize_t) {
      f.set_cost(2, 1.0);
    } else {
      f.set_cost(3, 1.0);
      f.set_cost(4, 1.0);
    }
    for (int k = 0; k < 2; ++k) {
      std::vector<double> r(5, 0.0);
      r[k] = 1.0;
      f.add_row(r, Sense::le, span[k]);
      const double u_nom = nominal.mean[k] - lo[k];
      r[3 + k] = -1.0;
      f.add_row(r, Sense::le, u_nom);
      r[k] = -1.0;
      f.add_row(r, Sense::le, -u_nom);
    }
    for (const auto& c : constraints) {
      std::vector<double> r(5, 0.0);
      r[0] = c.a[0];
      r[1] = c.a[1];
      r[2] = -1.0;
      f.add_row(r, Sense::le, detail::tightened_rhs(c, exec_noise, z_nu) - c.a[0] * lo[0] - c.a[1] * lo[1]);
    }
    if (t_cap >= 0.0) {
      std::vector<double> r(5, 0.0);
      r[2] = 1.0;
      f.add_row(r, Sense::le, t_cap);
    }
    return solver.solve(f);
  };

  const LpSolution stage1 = fallback_lp(-1.0, true);
  LpSolution stage2 = stage1;
  if (stage1.status == LpSolution::Status::optimal) {
    const double cap = stage1.x[2] + 1e-9 * (1.0 + stage1.x[2]);
    const LpSolution refined = fallback_lp(cap, false);
    if (refined.status == LpSolution::Status::optimal) stage2 = refined;
  }
  out.status = ProjectionStatus::infeasible_fallback;
  out.adjusted.std = {0.0, 0.0};
  if (stage2.status == LpSolution::Status::optimal) {
    out.adjusted.mean = {lo[0] + stage2.x[0], lo[1] + stage2.x[1]};
  } else {
    out.adjusted.mean = bounds.clamp(nominal.mean);
  }
  out.max_violation = std::max(
      0.0, detail::projection_violation(out.adjusted, constraints, exec_noise, bounds, z_u, z_nu));
  return out;
}

}  // namespace corl
