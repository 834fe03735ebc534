#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "icl/numerics.hpp"
#include "icl/random.hpp"

namespace icltest {

inline icl::Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  icl::Rng rng(seed);
  icl::Matrix m(r, c);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

inline icl::Vector random_vector(std::size_t n, std::uint64_t seed) {
  icl::Rng rng(seed);
  icl::Vector v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

inline double max_abs_diff(const icl::Matrix& a, const icl::Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<icl::Vector> solve_square(std::vector<std::vector<double>> a, icl::Vector b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-12) return std::nullopt;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  icl::Vector x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

inline void for_each_subset(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Exhaustive LAD oracle: some optimum interpolates d rows when X has full
// column rank, so the best interpolating basic solution is optimal.
inline double lad_bruteforce(const icl::Matrix& x, const icl::Vector& y) {
  const std::size_t t = x.rows(), d = x.cols();
  double best = std::numeric_limits<double>::infinity();
  for_each_subset(t, d, [&](const std::vector<std::size_t>& rows) {
    std::vector<std::vector<double>> a(d, std::vector<double>(d));
    icl::Vector b(d);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) a[r][c] = x(rows[r], c);
      b[r] = y[rows[r]];
    }
    const auto w = solve_square(a, b);
    if (!w) return;
    double obj = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      double p = 0.0;
      for (std::size_t c = 0; c < d; ++c) p += x(i, c) * (*w)[c];
      obj += std::abs(y[i] - p);
    }
    best = std::min(best, obj);
  });
  return best;
}

}  // namespace icltest
