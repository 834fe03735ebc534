#pragma once

// Classical in-context baselines: minimum-norm least squares, ridge, and
// least-absolute-deviations regression (exact LP and ADMM), plus noise-model
// log-likelihood scoring of residual vectors.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "icl/error.hpp"
#include "icl/numerics.hpp"
#include "icl/simplex.hpp"
#include "icl/tasks.hpp"

namespace icl {

struct FitResult {
  Vector w_hat;
  bool converged = true;
  std::size_t iterations = 0;
  double objective = 0.0;  ///< the solver's own objective at w_hat
};

struct L1SolverConfig {
  double admm_penalty = 1.0;
  std::size_t max_iter = 2000;  ///< ADMM iterations
  double primal_tol = 1e-7;
  double dual_tol = 1e-7;
  double lp_pivot_tol = 1e-9;
  std::size_t lp_max_pivots = 50000;

  void validate() const {
    if (!(admm_penalty > 0.0)) throw InvalidInput("admm_penalty must be > 0");
    if (!(primal_tol > 0.0) || !(dual_tol > 0.0) || !(lp_pivot_tol > 0.0))
      throw InvalidInput("L1 solver tolerances must be > 0");
    if (max_iter == 0 || lp_max_pivots == 0) throw InvalidInput("L1 solver iteration caps must be >= 1");
  }
};

namespace detail {

inline void check_design(const Matrix& x, std::span<const double> y, const char* who) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidInput(std::string(who) + ": empty design matrix");
  if (x.rows() != y.size()) throw InvalidInput(std::string(who) + ": X rows != len(y)");
  if (!all_finite(x.data()) || !all_finite(y)) throw InvalidInput(std::string(who) + ": non-finite input");
}

inline Vector residuals(const Matrix& x, std::span<const double> y, std::span<const double> w) {
  Vector r = matvec(x, w);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  return r;
}

}  // namespace detail

/// Sum of absolute residuals ‖y − Xw‖₁.
[[nodiscard]] inline double l1_objective(const Matrix& x, std::span<const double> y, std::span<const double> w) {
  return norm1(detail::residuals(x, y, w));
}

/// Minimum-ℓ₂-norm least squares, ŵ = X⁺y.
[[nodiscard]] inline FitResult fit_ols(const Matrix& x, std::span<const double> y) {
  detail::check_design(x, y, "fit_ols");
  FitResult f;
  f.w_hat = matvec(pinv(x), y);
  const Vector r = detail::residuals(x, y, f.w_hat);
  f.objective = dot(r, r);
  return f;
}

/// ŵ = (XᵀX + αI)⁻¹Xᵀy. The reported objective is ‖y − Xŵ‖² + α‖ŵ‖².
[[nodiscard]] inline FitResult fit_ridge(const Matrix& x, std::span<const double> y, double alpha) {
  detail::check_design(x, y, "fit_ridge");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidInput("fit_ridge: alpha must be finite and > 0");
  Matrix g = gram(x);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += alpha;
  FitResult f;
  f.w_hat = solve_spd(g, matvec_t(x, y));
  const Vector r = detail::residuals(x, y, f.w_hat);
  f.objective = dot(r, r) + alpha * dot(f.w_hat, f.w_hat);
  return f;
}

/// Least absolute deviations as the LP
///   min Σ(uᵢ + vᵢ)  s.t.  X(w⁺ − w⁻) + u − v = y,  w⁺, w⁻, u, v ≥ 0.
/// The vertex returned by the simplex is re-solved from its interpolation
/// conditions (rows with zero residual, free coordinates in the basis) to
/// strip the rounding accumulated in the tableau.
[[nodiscard]] inline FitResult fit_l1_lp(const Matrix& x, std::span<const double> y, const L1SolverConfig& cfg = {}) {
  detail::check_design(x, y, "fit_l1_lp");
  cfg.validate();
  const std::size_t t = x.rows();
  const std::size_t d = x.cols();
  const std::size_t n = 2 * d + 2 * t;
  Matrix a(t, n);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      a(i, j) = x(i, j);
      a(i, d + j) = -x(i, j);
    }
    a(i, 2 * d + i) = 1.0;
    a(i, 2 * d + t + i) = -1.0;
  }
  Vector c(n, 0.0);
  std::fill(c.begin() + static_cast<std::ptrdiff_t>(2 * d), c.end(), 1.0);

  const LpResult lp = solve_standard_lp(a, y, c, LpOptions{cfg.lp_pivot_tol, cfg.lp_max_pivots});
  if (lp.status == LpStatus::infeasible || lp.status == LpStatus::unbounded) {
    throw Error("fit_l1_lp: internal error, LAD linear program reported as " +
                std::string(lp.status == LpStatus::infeasible ? "infeasible" : "unbounded"));
  }

  FitResult f;
  f.w_hat.resize(d);
  for (std::size_t j = 0; j < d; ++j) f.w_hat[j] = lp.x[j] - lp.x[d + j];
  f.iterations = lp.pivots;
  f.converged = lp.status == LpStatus::optimal;
  f.objective = l1_objective(x, y, f.w_hat);

  if (f.converged) {
    std::vector<bool> basic(n + t, false);
    for (std::size_t b : lp.basis) basic[b] = true;
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < d; ++j)
      if (basic[j] || basic[d + j]) free_cols.push_back(j);
    std::vector<std::size_t> tight_rows;
    for (std::size_t i = 0; i < t; ++i)
      if (!basic[2 * d + i] && !basic[2 * d + t + i]) tight_rows.push_back(i);
    if (!free_cols.empty() && tight_rows.size() >= free_cols.size()) {
      Matrix sub(tight_rows.size(), free_cols.size());
      Vector rhs(tight_rows.size());
      for (std::size_t r = 0; r < tight_rows.size(); ++r) {
        rhs[r] = y[tight_rows[r]];
        for (std::size_t q = 0; q < free_cols.size(); ++q) sub(r, q) = x(tight_rows[r], free_cols[q]);
      }
      const Vector sol = matvec(pinv(sub), rhs);
      Vector polished(d, 0.0);
      for (std::size_t q = 0; q < free_cols.size(); ++q) polished[free_cols[q]] = sol[q];
      const double obj = l1_objective(x, y, polished);
      if (obj <= f.objective + 1e-9 * (1.0 + f.objective)) {
        f.w_hat = std::move(polished);
        f.objective = obj;
      }
    }
  }
  return f;
}

/// Least absolute deviations by ADMM on the splitting z = y − Xw:
///   w ← (XᵀX + εI)⁻¹Xᵀ(y − z + u)
///   z ← soft_threshold(y − Xw + u, 1/ρ)
///   u ← u + (y − Xw − z)
/// The problem is solved on y/‖y‖∞ and rescaled, so tolerances are relative
/// to the label magnitude and fits are equivariant under y ↦ c·y.
/// The iterate is then snapped to the best basic solution interpolating d of
/// its d+2 best-fitted rows whenever that lowers the objective.
[[nodiscard]] inline FitResult fit_l1_admm(const Matrix& x, std::span<const double> y,
                                           const L1SolverConfig& cfg = {}) {
  detail::check_design(x, y, "fit_l1_admm");
  cfg.validate();
  constexpr double kGramRidge = 1e-10;
  const std::size_t t = x.rows();
  const std::size_t d = x.cols();

  FitResult f;
  f.w_hat.assign(d, 0.0);
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) {
    f.objective = 0.0;
    return f;
  }
  Vector ys(y.begin(), y.end());
  for (auto& v : ys) v /= scale;

  Matrix g = gram(x);
  for (std::size_t i = 0; i < d; ++i) g(i, i) += kGramRidge;
  const Cholesky chol(g);

  const double rho = cfg.admm_penalty;
  const double tau = 1.0 / rho;
  Vector w(d, 0.0), z(t, 0.0), u(t, 0.0), xw(t, 0.0), rhs(t), dz(t);
  f.converged = false;
  std::size_t it = 0;
  while (it < cfg.max_iter) {
    ++it;
    for (std::size_t i = 0; i < t; ++i) rhs[i] = ys[i] - z[i] + u[i];
    w = chol.solve(matvec_t(x, rhs));
    xw = matvec(x, w);
    double primal = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double zi = soft_threshold(ys[i] - xw[i] + u[i], tau);
      dz[i] = zi - z[i];
      z[i] = zi;
      const double r = ys[i] - xw[i] - zi;
      u[i] += r;
      primal += r * r;
    }
    primal = std::sqrt(primal);
    const double dual = rho * norm2(matvec_t(x, dz));
    if (primal < cfg.primal_tol && dual < cfg.dual_tol) {
      f.converged = true;
      break;
    }
  }
  for (std::size_t j = 0; j < d; ++j) f.w_hat[j] = w[j] * scale;
  f.iterations = it;
  f.objective = l1_objective(x, y, f.w_hat);

  // snap to the best vertex through d of the d+2 best-fitted rows
  if (t >= d) {
    const Vector r = detail::residuals(x, y, f.w_hat);
    const std::size_t m = std::min(t, d + 2);
    std::vector<std::size_t> order(t);
    for (std::size_t i = 0; i < t; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + m, order.end(),
                      [&](std::size_t a, std::size_t b) { return std::abs(r[a]) < std::abs(r[b]); });
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + d, true);
    do {
      Matrix sub(d, d);
      Vector rhs(d);
      for (std::size_t i = 0, q = 0; i < m; ++i) {
        if (!pick[i]) continue;
        rhs[q] = y[order[i]];
        for (std::size_t j = 0; j < d; ++j) sub(q, j) = x(order[i], j);
        ++q;
      }
      Vector polished = matvec(pinv(sub), rhs);
      const double obj = l1_objective(x, y, polished);
      if (obj < f.objective) {
        f.w_hat = std::move(polished);
        f.objective = obj;
      }
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return f;
}

/// ŵ · x_query
[[nodiscard]] inline double predict(const FitResult& fit, std::span<const double> x_query) {
  if (fit.w_hat.size() != x_query.size()) throw InvalidInput("predict: dimension mismatch");
  return dot(fit.w_hat, x_query);
}

/// Σᵢ log P_ε(rᵢ) for ε = scale·ξ with ξ drawn from the model's family.
/// Out-of-support residuals give −∞; lattice families (none, Bernoulli,
/// Poisson) accept residuals within 1e-9 of a support point.
[[nodiscard]] inline double eval_loglik(const NoiseModel& model, std::span<const double> residuals) {
  validate(model);
  constexpr double kLattice = 1e-9;
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double s = model.scale;
  const double log_s = std::log(s);
  double total = 0.0;
  auto lattice_point = [&](double r, long long& k) {
    const double q = r / s;
    const double nearest = std::round(q);
    if (std::abs(q - nearest) > kLattice) return false;
    k = static_cast<long long>(nearest);
    return true;
  };
  for (double r : residuals) {
    const double term = std::visit(
        overloaded{
            [&](const NoNoise&) { return std::abs(r) <= kLattice ? 0.0 : kNegInf; },
            [&](const GaussianNoise& m) {
              const double sd = m.sigma * s;
              return -0.5 * std::log(2.0 * std::numbers::pi * sd * sd) - r * r / (2.0 * sd * sd);
            },
            [&](const BernoulliNoise& m) {
              long long k = 0;
              if (!lattice_point(r, k) || (k != 0 && k != 1)) return kNegInf;
              return k == 1 ? std::log(m.p) : std::log1p(-m.p);
            },
            [&](const ExponentialNoise& m) {
              if (r < 0.0) return kNegInf;
              return std::log(m.lambda) - m.lambda * (r / s) - log_s;
            },
            [&](const GammaNoise& m) {
              if (r < 0.0) return kNegInf;
              const double q = r / s;
              return -std::lgamma(m.alpha) - m.alpha * std::log(m.theta) + (m.alpha == 1.0 ? 0.0 : (m.alpha - 1.0) * std::log(q)) -
                     q / m.theta - log_s;
            },
            [&](const PoissonNoise& m) {
              long long k = 0;
              if (!lattice_point(r, k) || k < 0) return kNegInf;
              const double kd = static_cast<double>(k);
              return kd * std::log(m.lambda) - m.lambda - std::lgamma(kd + 1.0);
            },
            [&](const StudentTNoise& m) {
              const double q = r / s;
              const double nu = m.nu;
              return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
                     0.5 * (nu + 1.0) * std::log1p(q * q / nu) - log_s;
            }},
        model.family);
    if (term == kNegInf) return kNegInf;
    total += term;
  }
  return total;
}

}  // namespace icl
