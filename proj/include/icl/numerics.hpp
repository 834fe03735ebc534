#pragma once

// Dense linear algebra used across the library. Everything is 64-bit and
// row-major; sizes stay small (a few hundred rows at most), so the routines
// favour clarity and determinism over blocking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "icl/error.hpp"

namespace icl {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidInput("Matrix: data length " + std::to_string(data_.size()) +
                         " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw InvalidInput("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  [[nodiscard]] std::span<double> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  /// Copy of the leading `n` rows.
  [[nodiscard]] Matrix top_rows(std::size_t n) const {
    n = std::min(n, rows_);
    return Matrix(n, cols_, std::vector<double>(data_.begin(), data_.begin() + n * cols_));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Small vector/matrix helpers

[[nodiscard]] inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

[[nodiscard]] inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

[[nodiscard]] inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

[[nodiscard]] inline bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

[[nodiscard]] inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

[[nodiscard]] inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidInput("matmul: inner dimension mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// A·x
[[nodiscard]] inline Vector matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidInput("matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

/// Aᵀ·x
[[nodiscard]] inline Vector matvec_t(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw InvalidInput("matvec_t: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += ai[j] * x[i];
  }
  return y;
}

/// AᵀA
[[nodiscard]] inline Matrix gram(const Matrix& a) {
  Matrix g(a.cols(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      if (ai[p] == 0.0) continue;
      for (std::size_t q = 0; q < a.cols(); ++q) g(p, q) += ai[p] * ai[q];
    }
  }
  return g;
}

[[nodiscard]] inline Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidInput("subtract: shape mismatch");
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

[[nodiscard]] inline double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)

/// Thin SVD A = U·diag(s)·Vᵀ with U (m×r), V (n×r), r = min(m, n).
/// Singular values are sorted in descending order.
struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

inline constexpr int kSvdMaxSweeps = 100;

namespace detail {

// Hestenes one-sided Jacobi on the rows of `w` (each row is a column of the
// tall matrix being decomposed). Rotations are accumulated into `v`.
inline void jacobi_orthogonalize(Matrix& w, Matrix& v) {
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  constexpr double tol = 1e-15;
  for (int sweep = 0; sweep < kSvdMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double a = wp[i];
          const double b = wq[i];
          wp[i] = c * a - s * b;
          wq[i] = s * a + c * b;
        }
        auto vp = v.row(p);
        auto vq = v.row(q);
        for (std::size_t i = 0; i < v.cols(); ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericFailure("svd: Jacobi sweeps did not converge within " +
                       std::to_string(kSvdMaxSweeps) + " sweeps");
}

}  // namespace detail

[[nodiscard]] inline Svd svd(const Matrix& a) {
  if (!all_finite(a.data())) throw InvalidInput("svd: non-finite input");
  const bool wide = a.rows() < a.cols();
  // Work on the tall orientation; rows of `w` are the columns of the tall matrix.
  Matrix w = wide ? a : transpose(a);
  const std::size_t r = w.rows();
  Matrix v = Matrix::identity(r);  // rows are right singular vectors (transposed)
  detail::jacobi_orthogonalize(w, v);

  Vector s(r);
  for (std::size_t j = 0; j < r; ++j) s[j] = norm2(w.row(j));
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  const std::size_t tall_rows = w.cols();
  Matrix u(tall_rows, r);
  Matrix vv(r, r);
  Vector sorted(r);
  for (std::size_t jj = 0; jj < r; ++jj) {
    const std::size_t j = order[jj];
    sorted[jj] = s[j];
    for (std::size_t i = 0; i < tall_rows; ++i) u(i, jj) = s[j] > 0.0 ? w(j, i) / s[j] : 0.0;
    for (std::size_t i = 0; i < r; ++i) vv(i, jj) = v(j, i);
  }
  if (wide) return Svd{std::move(vv), std::move(sorted), std::move(u)};
  return Svd{std::move(u), std::move(sorted), std::move(vv)};
}

inline constexpr double kDefaultRcond = 1e-12;

/// Moore–Penrose pseudoinverse. Singular values at or below rcond·σ_max are
/// treated as zero.
[[nodiscard]] inline Matrix pinv(const Matrix& a, double rcond = kDefaultRcond) {
  if (!(rcond > 0.0 && rcond < 1.0)) throw InvalidInput("pinv: rcond must lie in (0, 1)");
  const Svd d = svd(a);
  Matrix p(a.cols(), a.rows());
  if (d.s.empty() || d.s[0] == 0.0) return p;
  const double cutoff = rcond * d.s[0];
  for (std::size_t k = 0; k < d.s.size(); ++k) {
    if (d.s[k] <= cutoff) continue;
    const double inv = 1.0 / d.s[k];
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double vik = d.v(i, k) * inv;
      if (vik == 0.0) continue;
      auto pi = p.row(i);
      for (std::size_t j = 0; j < a.rows(); ++j) pi[j] += vik * d.u(j, k);
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Symmetric positive-definite systems

/// Lower-triangular Cholesky factor of an SPD matrix, reusable across solves.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& a) : l_(a.rows(), a.cols()) {
    if (a.rows() != a.cols()) throw InvalidInput("cholesky: matrix is not square");
    if (!all_finite(a.data())) throw InvalidInput("cholesky: non-finite input");
    const std::size_t n = a.rows();
    for (std::size_t j = 0; j < n; ++j) {
      double diag = a(j, j);
      for (std::size_t k = 0; k < j; ++k) diag -= l_(j, k) * l_(j, k);
      if (!(diag > 0.0)) {
        throw NumericFailure("cholesky: non-positive pivot " + std::to_string(diag) + " at column " +
                             std::to_string(j));
      }
      const double ljj = std::sqrt(diag);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = a(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        l_(i, j) = s / ljj;
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return l_.rows(); }

  [[nodiscard]] Vector solve(std::span<const double> b) const {
    const std::size_t n = l_.rows();
    if (b.size() != n) throw InvalidInput("cholesky solve: dimension mismatch");
    Vector x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) x[i] -= l_(i, k) * x[k];
      x[i] /= l_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) x[i] -= l_(k, i) * x[k];
      x[i] /= l_(i, i);
    }
    return x;
  }

 private:
  Matrix l_;
};

/// Solves A·x = b for symmetric positive-definite A, with one step of
/// iterative refinement.
[[nodiscard]] inline Vector solve_spd(const Matrix& a, std::span<const double> b) {
  const Cholesky chol(a);
  Vector x = chol.solve(b);
  Vector r = matvec(a, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  const Vector dx = chol.solve(r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  return x;
}

/// Proximal map of tau·|·|.
[[nodiscard]] inline double soft_threshold(double v, double tau) {
  if (!(tau >= 0.0)) throw InvalidInput("soft_threshold: tau must be non-negative");
  const double mag = std::abs(v) - tau;
  return mag > 0.0 ? std::copysign(mag, v) : 0.0;
}

}  // namespace icl
