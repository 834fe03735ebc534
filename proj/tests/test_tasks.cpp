#include <catch_amalgamated.hpp>

#include <cmath>

#include "icl/tasks.hpp"

using namespace icl;

namespace {

double sample_variance(const Vector& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

}  // namespace

TEST_CASE("calibrated noise hits the target variance") {
  const std::vector<NoiseFamily> families{GaussianNoise{2.0},  BernoulliNoise{0.25}, ExponentialNoise{1.0},
                                          GammaNoise{2.0, 1.0}, PoissonNoise{1.0},   StudentTNoise{5.0}};
  for (double target : {0.25, 1.0}) {
    for (const auto& f : families) {
      const NoiseModel m = calibrate_noise(NoiseModel{f, 1.0}, target);
      Rng r(derive_seed(11, f.index()));
      const double v = sample_variance(sample_noise(m, 1000000, r));
      INFO(kind_name(f) << " target " << target << " got " << v);
      CHECK(std::abs(v / target - 1.0) < 0.03);
    }
  }
}

TEST_CASE("calibration refuses infinite variance and no noise") {
  CHECK_THROWS_AS(calibrate_noise(NoiseModel{StudentTNoise{2.0}, 1.0}, 1.0), UnsupportedCalibration);
  CHECK_THROWS_AS(calibrate_noise(NoiseModel{StudentTNoise{1.5}, 1.0}, 1.0), UnsupportedCalibration);
  CHECK_THROWS_AS(calibrate_noise(NoiseModel{NoNoise{}, 1.0}, 1.0), UnsupportedCalibration);
  CHECK_THROWS_AS(calibrate_noise(NoiseModel{GaussianNoise{}, 1.0}, 0.0), InvalidInput);
}

TEST_CASE("family variances") {
  CHECK(family_variance(BernoulliNoise{0.25}) == 0.1875);
  CHECK(family_variance(ExponentialNoise{2.0}) == 0.25);
  CHECK(family_variance(GammaNoise{2.0, 3.0}) == 18.0);
  CHECK(family_variance(PoissonNoise{4.0}) == 4.0);
  CHECK(family_variance(StudentTNoise{4.0}) == 2.0);
  CHECK(std::isinf(family_variance(StudentTNoise{2.0})));
}

TEST_CASE("laplace prior variance is 2b^2") {
  Rng r(3);
  const Vector w = sample_coefficients(LaplacePrior{0.7}, 1000000, r);
  CHECK(std::abs(sample_variance(w) / (2 * 0.49) - 1.0) < 0.03);
}

TEST_CASE("exponential prior is nonnegative and unit sphere has norm one") {
  Rng r(4);
  for (double v : sample_coefficients(ExponentialPrior{2.0}, 10000, r)) REQUIRE(v >= 0.0);
  for (std::size_t d : {1, 2, 5, 20}) CHECK(std::abs(norm2(sample_coefficients(UnitSpherePrior{}, d, r)) - 1.0) < 1e-14);
}

TEST_CASE("var1 lag-1 autocorrelation matches rho") {
  for (double rho : {0.4, 0.8}) {
    Rng r(5);
    const Matrix x = sample_features(Var1Features{rho, 1.0}, 100000, 1, r);
    double m = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) m += x(t, 0);
    m /= x.rows();
    double c0 = 0.0, c1 = 0.0;
    for (std::size_t t = 0; t < x.rows(); ++t) {
      c0 += (x(t, 0) - m) * (x(t, 0) - m);
      if (t > 0) c1 += (x(t, 0) - m) * (x(t - 1, 0) - m);
    }
    INFO("rho " << rho);
    CHECK(std::abs(c1 / c0 - rho) < 0.02);
  }
}

TEST_CASE("gamma features are positive with mean alpha*theta") {
  Rng r(6);
  const Matrix x = sample_features(GammaFeatures{2.0, 1.0}, 20000, 5, r);
  double s = 0.0;
  for (double v : x.data()) {
    REQUIRE(v > 0.0);
    s += v;
  }
  CHECK(s / x.data().size() == Catch::Approx(2.0).epsilon(0.02));
}

TEST_CASE("bernoulli noise takes only 0 and 1 before scaling") {
  Rng r(7);
  for (double v : sample_noise(NoiseModel{BernoulliNoise{0.25}, 1.0}, 10000, r)) REQUIRE((v == 0.0 || v == 1.0));
}

TEST_CASE("build_task is deterministic and labels equal Xw + eps") {
  TaskConfig c;
  c.noise = NoiseModel{GaussianNoise{0.5}, 1.0};
  c.seed = 9;
  const TaskInstance a = build_task(c), b = build_task(c);
  CHECK(a == b);
  REQUIRE(a.rows() == c.k + 1);
  for (std::size_t i = 0; i < a.rows(); ++i) CHECK(a.y[i] == Catch::Approx(a.clean_target(i) + a.eps[i]).margin(1e-14));
  c.seed = 10;
  CHECK_FALSE(build_task(c) == a);
}

TEST_CASE("masking zeroes inactive columns before labels are formed") {
  TaskConfig c;
  c.d = 6;
  c.k = 13;
  c.seed = 2;
  const TaskInstance t = build_task(c, 3);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 3; j < 6; ++j) REQUIRE(t.x(i, j) == 0.0);
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += t.w[j] * t.x(i, j);
    CHECK(t.y[i] == Catch::Approx(s).margin(1e-14));
  }
  CHECK_THROWS_AS(mask_features(t.x, 7), InvalidInput);
}

TEST_CASE("prompt layout") {
  TaskConfig c;
  c.d = 3;
  c.k = 4;
  c.seed = 1;
  const TaskInstance t = build_task(c);
  const PromptSequence p = assemble_prompt(t, 2);
  REQUIRE(p.length() == 5);
  CHECK(p.query_positions == std::vector<std::size_t>{0, 2, 4});
  CHECK(p.targets == Vector{t.y[0], t.y[1], t.y[2]});
  for (std::size_t i = 0; i <= 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(p.tokens(2 * i, j) == t.x(i, j));
  CHECK(p.tokens(1, 0) == t.y[0]);
  CHECK(p.tokens(1, 1) == 0.0);
  CHECK(p.tokens(3, 0) == t.y[1]);
  CHECK_THROWS_AS(assemble_prompt(t, 0), InvalidInput);
  CHECK_THROWS_AS(assemble_prompt(t, 5), InvalidInput);
  CHECK_NOTHROW(assemble_prompt(t, 4));
}

TEST_CASE("invalid configurations are rejected") {
  Rng r(1);
  CHECK_THROWS_AS(sample_coefficients(GaussianPrior{0.0}, 3, r), InvalidInput);
  CHECK_THROWS_AS(sample_features(Var1Features{1.0, 1.0}, 3, 3, r), InvalidInput);
  CHECK_THROWS_AS(sample_noise(NoiseModel{BernoulliNoise{0.7}, 1.0}, 3, r), InvalidInput);
  CHECK_THROWS_AS(sample_noise(NoiseModel{GaussianNoise{}, -1.0}, 3, r), InvalidInput);
  TaskConfig c;
  c.k = 0;
  CHECK_THROWS_AS(build_task(c), InvalidInput);
}
