#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "icl/estimators.hpp"
#include "support.hpp"

using namespace icl;
using icltest::random_matrix;
using icltest::random_vector;

namespace {

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-12); }

double median(Vector v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("small worked examples") {
  const FitResult o = fit_ols(Matrix{{1.0, 0.0}}, Vector{2.0});
  CHECK(o.w_hat[0] == Catch::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(o.w_hat[1]) < 1e-15);
  CHECK(fit_ridge(Matrix{{1.0}}, Vector{2.0}, 1.0).w_hat[0] == Catch::Approx(1.0).epsilon(1e-15));
  const Matrix ones(5, 1, Vector(5, 1.0));
  const Vector y{1, 2, 3, 10, 100};
  CHECK(fit_l1_lp(ones, y).w_hat[0] == 3.0);
  CHECK(std::abs(fit_l1_admm(ones, y).w_hat[0] - 3.0) <= 1e-4);
  const Matrix x = random_matrix(4, 4, 1);
  const Vector w = random_vector(4, 2);
  CHECK(fit_l1_lp(x, matvec(x, w)).objective < 1e-8);
  CHECK(eval_loglik(NoiseModel{ExponentialNoise{1.0}, 1.0}, Vector{1.0, 2.0}) == Catch::Approx(-3.0));
  CHECK(eval_loglik(NoiseModel{BernoulliNoise{0.25}, 1.0}, Vector{0.0, 1.0}) ==
        Catch::Approx(std::log(0.75) + std::log(0.25)));
}

TEST_CASE("ridge shrinks to zero as alpha grows") {
  const Matrix x = random_matrix(10, 3, 3);
  const Vector y = random_vector(10, 4);
  CHECK(norm2(fit_ridge(x, y, 1e12).w_hat) < 1e-9 * norm2(matvec_t(x, y)));
}

TEST_CASE("OLS recovers w exactly from t = d noiseless rows") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix x = random_matrix(5, 5, 1000 + s);
    const Vector w = random_vector(5, 2000 + s);
    const FitResult f = fit_ols(x, matvec(x, w));
    double err = 0.0;
    for (std::size_t j = 0; j < 5; ++j) err = std::max(err, std::abs(f.w_hat[j] - w[j]));
    INFO("seed " << s);
    CHECK(err < 1e-8);
  }
}

TEST_CASE("underdetermined OLS interpolates with a row-space solution") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix x = random_matrix(3, 7, 3000 + s);
    const Vector y = random_vector(3, 4000 + s);
    const FitResult f = fit_ols(x, y);
    const Vector fx = matvec(x, f.w_hat);
    for (std::size_t i = 0; i < 3; ++i) CHECK(fx[i] == Catch::Approx(y[i]).margin(1e-10));
    // project onto the row space with the normal equations of Xᵀ
    const Vector coef = solve_spd(gram(transpose(x)), matvec(x, f.w_hat));
    const Vector proj = matvec_t(x, coef);
    double res = 0.0;
    for (std::size_t j = 0; j < 7; ++j) res = std::max(res, std::abs(proj[j] - f.w_hat[j]));
    CHECK(res < 1e-9);
  }
}

TEST_CASE("ridge solves its normal equations and tends to OLS") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix x = random_matrix(12, 4, 5000 + s);
    const Vector y = random_vector(12, 6000 + s);
    const FitResult r = fit_ridge(x, y, 0.7);
    Vector lhs = matvec_t(x, matvec(x, r.w_hat));
    const Vector rhs = matvec_t(x, y);
    for (std::size_t j = 0; j < 4; ++j) CHECK(lhs[j] + 0.7 * r.w_hat[j] == Catch::Approx(rhs[j]).margin(1e-10));
    const FitResult tiny = fit_ridge(x, y, 1e-10);
    const FitResult ols = fit_ols(x, y);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(tiny.w_hat[j] - ols.w_hat[j]) < 1e-5);
  }
  CHECK_THROWS_AS(fit_ridge(Matrix{{1.0}}, Vector{1.0}, 0.0), InvalidInput);
}

TEST_CASE("LP matches the exhaustive interpolation oracle") {
  for (std::uint64_t s = 0; s < 25; ++s) {
    Rng r(derive_seed(1, s));
    const Matrix x = random_matrix(12, 3, derive_seed(2, s));
    Vector y(12);
    for (auto& v : y) v = 3 * r.normal();
    const FitResult f = fit_l1_lp(x, y);
    CHECK(f.converged);
    CHECK(f.objective == Catch::Approx(icltest::lad_bruteforce(x, y)).margin(1e-6));
    CHECK(f.objective == Catch::Approx(l1_objective(x, y, f.w_hat)).margin(1e-12));
  }
}

TEST_CASE("LP optimum is not beaten by nearby points") {
  const Matrix x = random_matrix(20, 4, 9);
  const Vector y = random_vector(20, 10);
  const FitResult f = fit_l1_lp(x, y);
  Rng r(11);
  for (int i = 0; i < 500; ++i) {
    Vector w = f.w_hat;
    for (auto& v : w) v += 0.01 * r.normal();
    CHECK(l1_objective(x, y, w) >= f.objective - 1e-12);
  }
}

TEST_CASE("ADMM agrees with LP") {
  L1SolverConfig longer;
  longer.max_iter = 10000;
  for (std::uint64_t s = 0; s < 30; ++s) {
    const Matrix x = random_matrix(20, 5, derive_seed(3, s));
    const Vector y = random_vector(20, derive_seed(4, s));
    const FitResult lp = fit_l1_lp(x, y);
    INFO("seed " << s);
    CHECK(fit_l1_admm(x, y).objective <= lp.objective * (1 + 1e-3));
    CHECK(rel_gap(fit_l1_admm(x, y, longer).objective, lp.objective) <= 1e-4);
  }
}

TEST_CASE("l1 on an all-ones design returns the sample median") {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const std::size_t n = 5 + s % 8;
    const Matrix x(n, 1, Vector(n, 1.0));
    const Vector y = random_vector(n, derive_seed(5, s));
    const double med = median(y);
    const FitResult lp = fit_l1_lp(x, y);
    const FitResult ad = fit_l1_admm(x, y);
    if (n % 2) {
      CHECK(lp.w_hat[0] == med);
      CHECK(std::abs(ad.w_hat[0] - med) <= 1e-6);
    } else {
      // any point between the middle order statistics is optimal
      Vector v = y;
      std::sort(v.begin(), v.end());
      CHECK(lp.w_hat[0] >= v[n / 2 - 1]);
      CHECK(lp.w_hat[0] <= v[n / 2]);
      CHECK(ad.objective == Catch::Approx(lp.objective).epsilon(1e-6));
    }
  }
}

TEST_CASE("fits are equivariant under y -> c y") {
  const Matrix x = random_matrix(15, 3, 12);
  const Vector y = random_vector(15, 13);
  for (double c : {1e-3, 7.0, 1e4}) {
    Vector cy = y;
    for (auto& v : cy) v *= c;
    const FitResult o1 = fit_ols(x, y), o2 = fit_ols(x, cy);
    const FitResult l1 = fit_l1_lp(x, y), l2 = fit_l1_lp(x, cy);
    const FitResult a1 = fit_l1_admm(x, y), a2 = fit_l1_admm(x, cy);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(o2.w_hat[j] == Catch::Approx(c * o1.w_hat[j]).epsilon(1e-10).margin(1e-12 * c));
      CHECK(l2.w_hat[j] == Catch::Approx(c * l1.w_hat[j]).epsilon(1e-8).margin(1e-10 * c));
      CHECK(a2.w_hat[j] == Catch::Approx(c * a1.w_hat[j]).epsilon(1e-8).margin(1e-10 * c));
    }
  }
}

TEST_CASE("ADMM on zero labels returns zero immediately") {
  const FitResult f = fit_l1_admm(random_matrix(6, 2, 1), Vector(6, 0.0));
  CHECK(f.w_hat == Vector{0.0, 0.0});
  CHECK(f.iterations == 0);
}

TEST_CASE("ADMM respects the iteration cap") {
  L1SolverConfig cfg;
  cfg.max_iter = 3;
  const FitResult f = fit_l1_admm(random_matrix(20, 5, 2), random_vector(20, 3), cfg);
  CHECK(f.iterations <= 3);
  CHECK_FALSE(f.converged);
}

TEST_CASE("estimators reject bad input") {
  CHECK_THROWS_AS(fit_ols(Matrix(3, 2), Vector(2)), InvalidInput);
  CHECK_THROWS_AS(fit_l1_lp(Matrix{{1.0}}, Vector{INFINITY}), InvalidInput);
  L1SolverConfig bad;
  bad.admm_penalty = 0.0;
  CHECK_THROWS_AS(fit_l1_admm(Matrix{{1.0}}, Vector{1.0}, bad), InvalidInput);
  CHECK_THROWS_AS(predict(FitResult{Vector{1.0, 2.0}}, Vector{1.0}), InvalidInput);
  CHECK(predict(FitResult{Vector{1.0, 2.0}}, Vector{3.0, -1.0}) == 1.0);
}

TEST_CASE("log-likelihood examples") {
  const double pi = std::numbers::pi;
  CHECK(eval_loglik(NoiseModel{GaussianNoise{1.0}, 1.0}, Vector{0.0}) == Catch::Approx(-0.5 * std::log(2 * pi)));
  CHECK(eval_loglik(NoiseModel{ExponentialNoise{1.0}, 1.0}, Vector{2.0}) == Catch::Approx(-2.0));
  CHECK(eval_loglik(NoiseModel{PoissonNoise{1.0}, 1.0}, Vector{0.0}) == Catch::Approx(-1.0));
  CHECK(eval_loglik(NoiseModel{StudentTNoise{1.0}, 1.0}, Vector{0.0}) == Catch::Approx(-std::log(pi)));
  CHECK(eval_loglik(NoiseModel{BernoulliNoise{0.25}, 1.0}, Vector{1.0}) == Catch::Approx(std::log(0.25)));
  CHECK(eval_loglik(NoiseModel{GammaNoise{2.0, 1.0}, 1.0}, Vector{1.0}) == Catch::Approx(-1.0));
  CHECK(eval_loglik(NoiseModel{GammaNoise{1.0, 1.0}, 1.0}, Vector{0.0}) == 0.0);
  // a scale s shifts each density by -log s
  CHECK(eval_loglik(NoiseModel{GaussianNoise{1.0}, 2.0}, Vector{0.0}) ==
        Catch::Approx(-0.5 * std::log(2 * pi) - std::log(2.0)));
}

TEST_CASE("out-of-support residuals give -inf") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(eval_loglik(NoiseModel{ExponentialNoise{1.0}, 1.0}, Vector{-0.1}) == ninf);
  CHECK(eval_loglik(NoiseModel{BernoulliNoise{0.25}, 1.0}, Vector{0.5}) == ninf);
  CHECK(eval_loglik(NoiseModel{PoissonNoise{1.0}, 1.0}, Vector{-1.0}) == ninf);
  CHECK(eval_loglik(NoiseModel{NoNoise{}, 1.0}, Vector{1e-3}) == ninf);
  CHECK(eval_loglik(NoiseModel{NoNoise{}, 1.0}, Vector{0.0, 0.0}) == 0.0);
}

TEST_CASE("gaussian loglik prefers OLS, absolute loss prefers LAD") {
  const Matrix x = random_matrix(30, 3, 21);
  const Vector y = random_vector(30, 22);
  const FitResult ols = fit_ols(x, y), lad = fit_l1_lp(x, y);
  const NoiseModel g{GaussianNoise{1.0}, 1.0};
  CHECK(eval_loglik(g, detail::residuals(x, y, ols.w_hat)) >= eval_loglik(g, detail::residuals(x, y, lad.w_hat)));
  CHECK(l1_objective(x, y, lad.w_hat) <= l1_objective(x, y, ols.w_hat));
}
