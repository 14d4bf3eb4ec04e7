#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace corl {

/// Small dense linear program:
///   minimize c^T x  subject to  rows (A_i x  {<=, =, >=}  b_i),  x >= 0.
class LinearProgram {
 public:
  enum class Sense { le, eq, ge };

  explicit LinearProgram(std::size_t num_vars) : n_(num_vars), cost_(num_vars, 0.0) {}

  std::size_t num_vars() const { return n_; }
  std::size_t num_rows() const { return rows_.size(); }

  void set_cost(std::size_t j, double c) { cost_.at(j) = c; }
  const std::vector<double>& cost() const { return cost_; }

  void add_row(std::vector<double> coeffs, Sense sense, double rhs) {
    if (coeffs.size() != n_) throw std::invalid_argument("LinearProgram: row width mismatch");
    rows_.push_back({std::move(coeffs), sense, rhs});
  }

  struct Row {
    std::vector<double> a;
    Sense sense;
    double rhs;
  };
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::size_t n_;
  std::vector<double> cost_;
  std::vector<Row> rows_;
};

struct LpSolution {
  enum class Status { optimal, infeasible, unbounded };
  Status status{Status::infeasible};
  std::vector<double> x;
  double objective{std::numeric_limits<double>::quiet_NaN()};
};

/// Two-phase tableau simplex with Bland's rule. Entering and leaving
/// variables are chosen by lowest index, so results are deterministic and
/// cycling cannot occur. Sized for problems with tens of rows.
class DenseSimplex {
 public:
  explicit DenseSimplex(double tol = 1e-11) : tol_(tol) {}

  LpSolution solve(const LinearProgram& lp) const {
    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.num_rows();

    // Column layout: structural | slack/surplus (one per inequality) | artificial.
    std::size_t num_slack = 0;
    for (const auto& r : lp.rows())
      if (r.sense != LinearProgram::Sense::eq) ++num_slack;

    // Normalize every row to a non-negative rhs first; this decides which
    // rows need an artificial variable.
    struct NormRow {
      std::vector<double> a;
      double slack_sign;  // coefficient of the row's slack, 0 for equalities
      double rhs;
    };
    std::vector<NormRow> norm;
    norm.reserve(m);
    std::size_t num_art = 0;
    for (const auto& r : lp.rows()) {
      NormRow nr{r.a, 0.0, r.rhs};
      if (r.sense == LinearProgram::Sense::le) nr.slack_sign = 1.0;
      if (r.sense == LinearProgram::Sense::ge) nr.slack_sign = -1.0;
      if (nr.rhs < 0.0) {
        for (auto& v : nr.a) v = -v;
        nr.rhs = -nr.rhs;
        nr.slack_sign = -nr.slack_sign;
      }
      if (nr.slack_sign <= 0.0) ++num_art;
      norm.push_back(std::move(nr));
    }

    const std::size_t cols = n + num_slack + num_art;
    const std::size_t width = cols + 1;  // last column is rhs
    std::vector<double> t(m * width, 0.0);
    std::vector<std::size_t> basis(m);
    auto at = [&](std::size_t i, std::size_t j) -> double& { return t[i * width + j]; };

    std::size_t slack_col = n;
    std::size_t art_col = n + num_slack;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& nr = norm[i];
      for (std::size_t j = 0; j < n; ++j) at(i, j) = nr.a[j];
      at(i, cols) = nr.rhs;
      if (nr.slack_sign != 0.0) {
        at(i, slack_col) = nr.slack_sign;
        if (nr.slack_sign > 0.0) basis[i] = slack_col;
        ++slack_col;
      }
      if (nr.slack_sign <= 0.0) {
        at(i, art_col) = 1.0;
        basis[i] = art_col;
        ++art_col;
      }
    }

    LpSolution sol;

    // Phase 1: minimize the sum of artificials.
    if (num_art > 0) {
      std::vector<double> c1(cols, 0.0);
      for (std::size_t j = n + num_slack; j < cols; ++j) c1[j] = 1.0;
      if (!iterate(t, basis, m, cols, c1, cols)) {
        sol.status = LpSolution::Status::unbounded;  // cannot happen in phase 1
        return sol;
      }
      double infeas = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        if (basis[i] >= n + num_slack) infeas += at(i, cols);
      const double scale = 1.0 + max_abs_rhs(norm);
      if (infeas > 1e-9 * scale) {
        sol.status = LpSolution::Status::infeasible;
        return sol;
      }
      // Drive remaining (zero-level) artificials out of the basis.
      for (std::size_t i = 0; i < m; ++i) {
        if (basis[i] < n + num_slack) continue;
        for (std::size_t j = 0; j < n + num_slack; ++j) {
          if (std::abs(at(i, j)) > 1e-9) {
            pivot(t, basis, m, width, i, j);
            break;
          }
        }
      }
    }

    // Phase 2 over structural + slack columns only; artificial columns are
    // barred from entering.
    std::vector<double> c2(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) c2[j] = lp.cost()[j];
    if (!iterate(t, basis, m, cols, c2, n + num_slack)) {
      sol.status = LpSolution::Status::unbounded;
      return sol;
    }

    sol.status = LpSolution::Status::optimal;
    sol.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n) sol.x[basis[i]] = std::max(0.0, at(i, cols));
    sol.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective += lp.cost()[j] * sol.x[j];
    return sol;
  }

 private:
  static double max_abs_rhs(const auto& rows) {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, std::abs(r.rhs));
    return m;
  }

  static void pivot(std::vector<double>& t, std::vector<std::size_t>& basis, std::size_t m,
                    std::size_t width, std::size_t r, std::size_t c) {
    double* pr = &t[r * width];
    const double inv = 1.0 / pr[c];
    for (std::size_t j = 0; j < width; ++j) pr[j] *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      double* pi = &t[i * width];
      const double f = pi[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) pi[j] -= f * pr[j];
      pi[c] = 0.0;
    }
    basis[r] = c;
  }

  // Runs simplex iterations for cost vector c, allowing columns < enter_limit
  // to enter. Returns false if unbounded.
  bool iterate(std::vector<double>& t, std::vector<std::size_t>& basis, std::size_t m,
               std::size_t cols, const std::vector<double>& c, std::size_t enter_limit) const {
    const std::size_t width = cols + 1;
    std::vector<char> in_basis(cols, 0);
    const std::size_t max_iter = 50 * (m + cols) + 100;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      std::fill(in_basis.begin(), in_basis.end(), 0);
      for (std::size_t i = 0; i < m; ++i) in_basis[basis[i]] = 1;

      // Bland: first column with negative reduced cost.
      std::size_t enter = cols;
      for (std::size_t j = 0; j < enter_limit; ++j) {
        if (in_basis[j]) continue;
        double rc = c[j];
        for (std::size_t i = 0; i < m; ++i) rc -= c[basis[i]] * t[i * width + j];
        if (rc < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter == cols) return true;

      // Ratio test; ties broken by lowest basic variable index.
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double a = t[i * width + enter];
        if (a <= tol_) continue;
        const double ratio = t[i * width + cols] / a;
        if (ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && leave < m && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m) return false;
      pivot(t, basis, m, width, leave, enter);
    }
    throw std::runtime_error("DenseSimplex: iteration limit exceeded");
  }

  double tol_;
};

}  // namespace corl
