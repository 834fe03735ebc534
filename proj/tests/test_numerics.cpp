#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "icl/numerics.hpp"
#include "support.hpp"

using namespace icl;
using Catch::Approx;
using icltest::random_matrix;

TEST_CASE("pinv of identity and rank-deficient diagonal") {
  const Matrix i3 = Matrix::identity(3);
  CHECK(icltest::max_abs_diff(pinv(i3), i3) < 1e-15);

  const Matrix d{{2.0, 0.0}, {0.0, 0.0}};
  const Matrix p = pinv(d);
  CHECK(p(0, 0) == Approx(0.5).epsilon(1e-15));
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 0) == 0.0);
  CHECK(p(1, 1) == 0.0);
}

TEST_CASE("pinv Penrose residual on a seeded 7x4 matrix") {
  const Matrix a = random_matrix(7, 4, 11);
  const Matrix p = pinv(a);
  CHECK(frobenius_norm(subtract(matmul(matmul(a, p), a), a)) < 1e-10);
}

TEST_CASE("Penrose conditions hold on random shapes up to 64x64") {
  std::uint64_t seed = 100;
  for (auto [r, c] : {std::pair{1, 1}, {3, 8}, {8, 3}, {20, 20}, {64, 64}, {50, 17}, {17, 50}}) {
    const Matrix a = random_matrix(r, c, ++seed);
    const Matrix p = pinv(a);
    INFO(r << "x" << c);
    CHECK(frobenius_norm(subtract(matmul(matmul(a, p), a), a)) < 1e-9);
    CHECK(frobenius_norm(subtract(matmul(matmul(p, a), p), p)) < 1e-9);
  }
}

TEST_CASE("Penrose conditions on an exactly rank-deficient product") {
  const Matrix a = matmul(random_matrix(12, 3, 5), random_matrix(3, 9, 6));
  const Matrix p = pinv(a);
  CHECK(frobenius_norm(subtract(matmul(matmul(a, p), a), a)) < 1e-9);
  CHECK(frobenius_norm(subtract(matmul(matmul(p, a), p), p)) < 1e-9);
  // A·A⁺ and A⁺·A are symmetric projectors
  const Matrix ap = matmul(a, p);
  CHECK(icltest::max_abs_diff(ap, transpose(ap)) < 1e-10);
}

TEST_CASE("pinv inverts full-rank square matrices") {
  for (std::uint64_t s = 1; s <= 10; ++s) {
    Matrix a = random_matrix(6, 6, 200 + s);
    for (std::size_t i = 0; i < 6; ++i) a(i, i) += 4.0;
    const Matrix p = pinv(a);
    CHECK(icltest::max_abs_diff(matmul(a, p), Matrix::identity(6)) < 1e-10);
    CHECK(icltest::max_abs_diff(matmul(p, a), Matrix::identity(6)) < 1e-10);
  }
}

TEST_CASE("pinv rejects bad input") {
  Matrix a = random_matrix(3, 3, 1);
  CHECK_THROWS_AS(pinv(a, 0.0), InvalidInput);
  CHECK_THROWS_AS(pinv(a, 1.0), InvalidInput);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(pinv(a), InvalidInput);
  a(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(svd(a), InvalidInput);
}

TEST_CASE("svd reconstructs and orders singular values") {
  const Matrix a = random_matrix(9, 5, 77);
  const Svd d = svd(a);
  REQUIRE(d.s.size() == 5);
  for (std::size_t i = 1; i < d.s.size(); ++i) CHECK(d.s[i - 1] >= d.s[i]);
  Matrix us = d.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= d.s[j];
  CHECK(icltest::max_abs_diff(matmul(us, transpose(d.v)), a) < 1e-12);
}

TEST_CASE("solve_spd examples") {
  const Vector x = solve_spd(Matrix::identity(2), Vector{3.0, -1.0});
  CHECK(x[0] == 3.0);
  CHECK(x[1] == -1.0);
  const Vector y = solve_spd(Matrix{{4.0}}, Vector{8.0});
  CHECK(y[0] == 2.0);
}

TEST_CASE("solve_spd residual and agreement with pinv") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix m = random_matrix(5, 5, 300 + s);
    Matrix a = gram(m);
    for (std::size_t i = 0; i < 5; ++i) a(i, i) += 1.0;
    const Vector b = icltest::random_vector(5, 400 + s);
    const Vector x = solve_spd(a, b);
    Vector r = matvec(a, x);
    for (std::size_t i = 0; i < 5; ++i) r[i] -= b[i];
    CHECK(norm2(r) < 1e-10 * norm2(b));
    const Vector xp = matvec(pinv(a), b);
    Vector diff(5);
    for (std::size_t i = 0; i < 5; ++i) diff[i] = x[i] - xp[i];
    CHECK(norm2(diff) <= 1e-8 * norm2(xp));
  }
}

TEST_CASE("solve_spd rejects indefinite matrices") {
  const Matrix a{{1.0, 2.0}, {2.0, 1.0}};
  CHECK_THROWS_AS(solve_spd(a, Vector{1.0, 1.0}), NumericFailure);
  CHECK_THROWS_AS(Cholesky(Matrix{{0.0}}), NumericFailure);
}

TEST_CASE("soft_threshold examples") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK_THROWS_AS(soft_threshold(1.0, -0.1), InvalidInput);
}

TEST_CASE("soft_threshold is odd, non-expansive and the identity at tau=0") {
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const double v1 = 5.0 * rng.normal(), v2 = 5.0 * rng.normal(), tau = 3.0 * rng.uniform();
    CHECK(soft_threshold(-v1, tau) == -soft_threshold(v1, tau));
    // two rounded subtractions on the left, one on the right
    CHECK(std::abs(soft_threshold(v1, tau) - soft_threshold(v2, tau)) <= std::abs(v1 - v2) + 4e-16 * (std::abs(v1) + std::abs(v2)));
    CHECK(soft_threshold(v1, 0.0) == v1);
  }
}

TEST_CASE("Matrix shape invariants") {
  CHECK_THROWS(Matrix(2, 3, Vector(5)));
  const Matrix m(4, 3);
  CHECK(m.data().size() == 12);
  CHECK_THROWS(Matrix{{1.0, 2.0}, {3.0}});
}
