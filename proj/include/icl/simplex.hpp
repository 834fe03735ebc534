#pragma once

// Dense two-phase primal simplex for standard-form linear programs
//
//     minimize cᵀx   subject to   A·x = b,  x ≥ 0.
//
// Phase 1 starts from an all-artificial basis; phase 2 optimizes the real
// objective with artificial columns barred from re-entering. Entering and
// leaving variables follow Bland's smallest-index rule, which rules out
// cycling on degenerate vertices.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "icl/error.hpp"
#include "icl/numerics.hpp"

namespace icl {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  Vector x;                          ///< primal solution (original variables)
  double objective = 0.0;            ///< cᵀx
  std::size_t pivots = 0;            ///< total pivots over both phases
  std::vector<std::size_t> basis;    ///< basic column per row; >= n marks a leftover artificial
};

struct LpOptions {
  double pivot_tol = 1e-9;
  std::size_t max_pivots = 50000;
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : cols_(cols), t_(rows + 1, cols) {}

  double& at(std::size_t i, std::size_t j) { return t_(i, j); }
  [[nodiscard]] double at(std::size_t i, std::size_t j) const { return t_(i, j); }
  [[nodiscard]] std::size_t rows() const { return t_.rows() - 1; }  // constraint rows
  [[nodiscard]] std::size_t rhs() const { return cols_ - 1; }
  [[nodiscard]] std::size_t cost_row() const { return t_.rows() - 1; }

  void pivot(std::size_t r, std::size_t c) {
    auto pr = t_.row(r);
    const double inv = 1.0 / pr[c];
    for (double& v : pr) v *= inv;
    pr[c] = 1.0;
    for (std::size_t i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      auto ri = t_.row(i);
      const double f = ri[c];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < cols_; ++j) ri[j] -= f * pr[j];
      ri[c] = 0.0;
    }
  }

 private:
  std::size_t cols_;
  Matrix t_;
};

}  // namespace detail

[[nodiscard]] inline LpResult solve_standard_lp(const Matrix& a, std::span<const double> b, std::span<const double> c,
                                                const LpOptions& opt = {}) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (b.size() != m || c.size() != n) throw InvalidInput("simplex: dimension mismatch");
  if (!(opt.pivot_tol > 0.0)) throw InvalidInput("simplex: pivot tolerance must be > 0");
  if (!all_finite(a.data()) || !all_finite(b) || !all_finite(c)) throw InvalidInput("simplex: non-finite input");

  // Columns: n originals, m artificials, rhs.
  detail::Tableau tab(m, n + m + 1);
  const std::size_t rhs = tab.rhs();
  const std::size_t z = tab.cost_row();
  std::vector<std::size_t> basis(m);
  double b_scale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double sign = b[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign * a(i, j);
    tab.at(i, n + i) = 1.0;
    tab.at(i, rhs) = sign * b[i];
    basis[i] = n + i;
    b_scale = std::max(b_scale, std::abs(b[i]));
  }

  LpResult res;
  const double tol = opt.pivot_tol;

  // Runs Bland-rule pivots on the current cost row. Columns >= limit never enter.
  auto run_phase = [&](std::size_t limit) -> LpStatus {
    for (;;) {
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j) {
        if (tab.at(z, j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter == limit) return LpStatus::optimal;
      std::size_t leave = m;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m; ++i) {
        const double aij = tab.at(i, enter);
        if (aij <= tol) continue;
        const double ratio = tab.at(i, rhs) / aij;
        if (ratio < best || (ratio == best && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m) return LpStatus::unbounded;
      if (res.pivots >= opt.max_pivots) return LpStatus::iteration_limit;
      tab.pivot(leave, enter);
      basis[leave] = enter;
      ++res.pivots;
    }
  };

  auto extract = [&]() {
    res.x.assign(n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n) res.x[basis[i]] = std::max(0.0, tab.at(i, rhs));
    res.objective = dot(c, res.x);
    res.basis = basis;
  };

  // Phase 1: minimize the sum of artificials. Reduced costs of the originals
  // are minus the column sums; the cost-row rhs holds minus the objective.
  for (std::size_t j = 0; j <= rhs; ++j) {
    if (j >= n && j < n + m) continue;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += tab.at(i, j);
    tab.at(z, j) = -s;
  }
  LpStatus st = run_phase(n);
  if (st == LpStatus::iteration_limit) {
    res.status = st;
    extract();
    return res;
  }
  if (-tab.at(z, rhs) > tol * b_scale * static_cast<double>(std::max<std::size_t>(m, 1))) {
    res.status = LpStatus::infeasible;
    extract();
    return res;
  }

  // Drive remaining artificials out of the basis where possible; rows where
  // that fails are redundant and keep a zero-valued artificial.
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < n) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(tab.at(i, j)) > tol) {
        tab.pivot(i, j);
        basis[i] = j;
        ++res.pivots;
        break;
      }
    }
  }

  // Phase 2 cost row: d_j = c_j - c_Bᵀ B⁻¹ A_j.
  for (std::size_t j = 0; j <= rhs; ++j) {
    double s = j < n ? c[j] : 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double cb = basis[i] < n ? c[basis[i]] : 0.0;
      if (cb != 0.0) s -= cb * tab.at(i, j);
    }
    tab.at(z, j) = s;
  }
  for (std::size_t i = 0; i < m; ++i) tab.at(z, basis[i]) = 0.0;
  st = run_phase(n);
  res.status = st;
  extract();
  return res;
}

}  // namespace icl
