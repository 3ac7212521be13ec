#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

// Self-contained dense two-phase simplex, sized for the tiny feasibility
// problems of the degradedness tests (tens of variables). Bland's rule
// throughout, so it cannot cycle.

namespace avwc {

struct LpResult {
  bool feasible = false;
  std::vector<double> x;  // primal solution over the caller's variables
  double objective = 0.0;
};

// minimize c.x  subject to  added rows,  x >= 0
class LinearProgram {
 public:
  explicit LinearProgram(std::size_t n_vars) : n_(n_vars), c_(n_vars, 0.0) {}

  void set_objective(std::size_t var, double coeff) { c_.at(var) = coeff; }

  void add_le_row(const std::vector<double>& coeffs, double rhs) {
    add_row(coeffs, rhs, /*is_eq=*/false);
  }
  void add_eq_row(const std::vector<double>& coeffs, double rhs) {
    add_row(coeffs, rhs, /*is_eq=*/true);
  }

  LpResult solve(double tol = 1e-9) const {
    const std::size_t m = rows_.size();
    std::size_t n_slack = 0;
    for (bool eq : is_eq_)
      if (!eq) ++n_slack;
    const std::size_t n_total = n_ + n_slack + m;  // + artificials
    const std::size_t art0 = n_ + n_slack;

    // Tableau: m rows of n_total coefficients plus RHS.
    std::vector<std::vector<double>> t(m, std::vector<double>(n_total + 1, 0.0));
    std::vector<std::size_t> basis(m);
    std::size_t slack = n_;
    for (std::size_t i = 0; i < m; ++i) {
      double sign = rhs_[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) t[i][j] = sign * rows_[i][j];
      if (!is_eq_[i]) t[i][slack++] = sign;
      t[i][art0 + i] = 1.0;
      t[i][n_total] = sign * rhs_[i];
      basis[i] = art0 + i;
    }

    auto run_phase = [&](const std::vector<double>& cost,
                         bool allow_artificial) {
      for (;;) {
        // reduced costs from scratch; sizes are tiny
        std::vector<double> red(cost);
        for (std::size_t i = 0; i < m; ++i) {
          double cb = cost[basis[i]];
          if (cb == 0.0) continue;
          for (std::size_t j = 0; j < n_total; ++j) red[j] -= cb * t[i][j];
        }
        std::size_t enter = n_total;  // sentinel
        for (std::size_t j = 0; j < n_total; ++j) {
          if (!allow_artificial && j >= art0) break;
          if (red[j] < -kPivotTol) {
            enter = j;  // Bland: first eligible index
            break;
          }
        }
        if (enter == n_total) return;  // optimal
        std::size_t leave = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
          if (t[i][enter] > kPivotTol) {
            double ratio = t[i][n_total] / t[i][enter];
            if (ratio < best_ratio - kPivotTol ||
                (ratio < best_ratio + kPivotTol &&
                 (leave == m || basis[i] < basis[leave]))) {
              best_ratio = ratio;
              leave = i;
            }
          }
        }
        if (leave == m)
          throw std::runtime_error("LinearProgram: unbounded");
        pivot(t, basis, leave, enter, n_total);
      }
    };

    // Phase 1: drive the artificials to zero.
    std::vector<double> phase1_cost(n_total, 0.0);
    for (std::size_t j = art0; j < n_total; ++j) phase1_cost[j] = 1.0;
    run_phase(phase1_cost, /*allow_artificial=*/true);

    double art_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] >= art0) art_sum += t[i][n_total];
    LpResult result;
    if (art_sum > tol) return result;  // infeasible

    // Pivot leftover zero-level artificials out where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (basis[i] < art0) continue;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(t[i][j]) > kPivotTol) {
          pivot(t, basis, i, j, n_total);
          break;
        }
      }
    }

    // Phase 2 with the real objective.
    std::vector<double> phase2_cost(n_total, 0.0);
    for (std::size_t j = 0; j < n_; ++j) phase2_cost[j] = c_[j];
    run_phase(phase2_cost, /*allow_artificial=*/false);

    result.feasible = true;
    result.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n_) result.x[basis[i]] = t[i][n_total];
    for (std::size_t j = 0; j < n_; ++j) result.objective += c_[j] * result.x[j];
    return result;
  }

 private:
  static constexpr double kPivotTol = 1e-11;

  static void pivot(std::vector<std::vector<double>>& t,
                    std::vector<std::size_t>& basis, std::size_t r,
                    std::size_t c, std::size_t n_total) {
    double pv = t[r][c];
    for (std::size_t j = 0; j <= n_total; ++j) t[r][j] /= pv;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == r || t[i][c] == 0.0) continue;
      double f = t[i][c];
      for (std::size_t j = 0; j <= n_total; ++j) t[i][j] -= f * t[r][j];
    }
    basis[r] = c;
  }

  void add_row(const std::vector<double>& coeffs, double rhs, bool is_eq) {
    if (coeffs.size() != n_)
      throw std::invalid_argument("LinearProgram: row width mismatch");
    rows_.push_back(coeffs);
    rhs_.push_back(rhs);
    is_eq_.push_back(is_eq);
  }

  std::size_t n_;
  std::vector<double> c_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
  std::vector<bool> is_eq_;
};

}  // namespace avwc
