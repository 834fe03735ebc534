#pragma once

// Regression task generation: y = Xw + ε with configurable priors on w,
// feature processes for X and noise families for ε, plus the interleaved
// prompt layout consumed by the transformer.
//
// Gamma parameters use the shape/scale convention everywhere (mean αθ,
// variance αθ²), for both features and noise.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "icl/numerics.hpp"
#include "icl/random.hpp"

namespace icl {

// ---------------------------------------------------------------------------
// Coefficient priors

struct GaussianPrior {
  double sigma = 1.0;
  friend bool operator==(const GaussianPrior&, const GaussianPrior&) = default;
};
struct LaplacePrior {
  double b = 1.0;
  friend bool operator==(const LaplacePrior&, const LaplacePrior&) = default;
};
struct ExponentialPrior {
  double lambda = 1.0;
  friend bool operator==(const ExponentialPrior&, const ExponentialPrior&) = default;
};
struct UnitSpherePrior {
  friend bool operator==(const UnitSpherePrior&, const UnitSpherePrior&) = default;
};

using CoefficientPrior = std::variant<GaussianPrior, LaplacePrior, ExponentialPrior, UnitSpherePrior>;

// ---------------------------------------------------------------------------
// Feature processes

struct IidGaussianFeatures {
  friend bool operator==(const IidGaussianFeatures&, const IidGaussianFeatures&) = default;
};
struct GammaFeatures {
  double alpha = 2.0;
  double theta = 1.0;
  friend bool operator==(const GammaFeatures&, const GammaFeatures&) = default;
};
/// x_1 ~ N(0, I), x_t = rho·x_{t-1} + N(0, sigma_innov² I).
struct Var1Features {
  double rho = 0.4;
  double sigma_innov = 1.0;
  friend bool operator==(const Var1Features&, const Var1Features&) = default;
};

using FeatureProcess = std::variant<IidGaussianFeatures, GammaFeatures, Var1Features>;

// ---------------------------------------------------------------------------
// Noise models

struct NoNoise {
  friend bool operator==(const NoNoise&, const NoNoise&) = default;
};
struct GaussianNoise {
  double sigma = 1.0;
  friend bool operator==(const GaussianNoise&, const GaussianNoise&) = default;
};
struct BernoulliNoise {
  double p = 0.25;
  friend bool operator==(const BernoulliNoise&, const BernoulliNoise&) = default;
};
struct ExponentialNoise {
  double lambda = 1.0;
  friend bool operator==(const ExponentialNoise&, const ExponentialNoise&) = default;
};
struct GammaNoise {
  double alpha = 2.0;
  double theta = 1.0;
  friend bool operator==(const GammaNoise&, const GammaNoise&) = default;
};
struct PoissonNoise {
  double lambda = 1.0;
  friend bool operator==(const PoissonNoise&, const PoissonNoise&) = default;
};
struct StudentTNoise {
  double nu = 2.0;
  friend bool operator==(const StudentTNoise&, const StudentTNoise&) = default;
};

using NoiseFamily = std::variant<NoNoise, GaussianNoise, BernoulliNoise, ExponentialNoise, GammaNoise,
                                 PoissonNoise, StudentTNoise>;

struct NoiseModel {
  NoiseFamily family = NoNoise{};
  double scale = 1.0;  ///< multiplies every draw
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Names (used by the config layer and in output metadata)

[[nodiscard]] inline std::string kind_name(const CoefficientPrior& p) {
  return std::visit(overloaded{[](const GaussianPrior&) { return "gaussian"; },
                               [](const LaplacePrior&) { return "laplace"; },
                               [](const ExponentialPrior&) { return "exponential"; },
                               [](const UnitSpherePrior&) { return "unit_sphere"; }},
                    p);
}
[[nodiscard]] inline std::string kind_name(const FeatureProcess& f) {
  return std::visit(overloaded{[](const IidGaussianFeatures&) { return "iid_gaussian"; },
                               [](const GammaFeatures&) { return "gamma"; },
                               [](const Var1Features&) { return "var1"; }},
                    f);
}
[[nodiscard]] inline std::string kind_name(const NoiseFamily& n) {
  return std::visit(overloaded{[](const NoNoise&) { return "none"; },
                               [](const GaussianNoise&) { return "gaussian"; },
                               [](const BernoulliNoise&) { return "bernoulli"; },
                               [](const ExponentialNoise&) { return "exponential"; },
                               [](const GammaNoise&) { return "gamma"; },
                               [](const PoissonNoise&) { return "poisson"; },
                               [](const StudentTNoise&) { return "student_t"; }},
                    n);
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(what) + " must be finite and > 0");
}
}  // namespace detail

inline void validate(const CoefficientPrior& prior) {
  std::visit(overloaded{[](const GaussianPrior& p) { detail::require_positive(p.sigma, "prior.gaussian.sigma"); },
                        [](const LaplacePrior& p) { detail::require_positive(p.b, "prior.laplace.b"); },
                        [](const ExponentialPrior& p) {
                          detail::require_positive(p.lambda, "prior.exponential.lambda");
                        },
                        [](const UnitSpherePrior&) {}},
             prior);
}

inline void validate(const FeatureProcess& process) {
  std::visit(overloaded{[](const IidGaussianFeatures&) {},
                        [](const GammaFeatures& f) {
                          detail::require_positive(f.alpha, "features.gamma.alpha");
                          detail::require_positive(f.theta, "features.gamma.theta");
                        },
                        [](const Var1Features& f) {
                          if (!(f.rho > 0.0 && f.rho < 1.0)) throw InvalidInput("features.var1.rho must lie in (0, 1)");
                          detail::require_positive(f.sigma_innov, "features.var1.sigma_innov");
                        }},
             process);
}

inline void validate(const NoiseModel& model) {
  detail::require_positive(model.scale, "noise.scale");
  std::visit(overloaded{[](const NoNoise&) {},
                        [](const GaussianNoise& n) { detail::require_positive(n.sigma, "noise.gaussian.sigma"); },
                        [](const BernoulliNoise& n) {
                          if (!(n.p > 0.0 && n.p <= 0.5)) throw InvalidInput("noise.bernoulli.p must lie in (0, 0.5]");
                        },
                        [](const ExponentialNoise& n) {
                          detail::require_positive(n.lambda, "noise.exponential.lambda");
                        },
                        [](const GammaNoise& n) {
                          detail::require_positive(n.alpha, "noise.gamma.alpha");
                          detail::require_positive(n.theta, "noise.gamma.theta");
                        },
                        [](const PoissonNoise& n) { detail::require_positive(n.lambda, "noise.poisson.lambda"); },
                        [](const StudentTNoise& n) { detail::require_positive(n.nu, "noise.student_t.nu"); }},
             model.family);
}

// ---------------------------------------------------------------------------
// Samplers

[[nodiscard]] inline Vector sample_coefficients(const CoefficientPrior& prior, std::size_t d, Rng& rng) {
  if (d == 0) throw InvalidInput("sample_coefficients: d must be >= 1");
  validate(prior);
  Vector w(d);
  std::visit(overloaded{[&](const GaussianPrior& p) {
                          for (auto& v : w) v = p.sigma * rng.normal();
                        },
                        [&](const LaplacePrior& p) {
                          for (auto& v : w) v = sample::laplace(rng, p.b);
                        },
                        [&](const ExponentialPrior& p) {
                          for (auto& v : w) v = sample::exponential(rng, p.lambda);
                        },
                        [&](const UnitSpherePrior&) {
                          double n = 0.0;
                          do {
                            for (auto& v : w) v = rng.normal();
                            n = norm2(w);
                          } while (n == 0.0);
                          for (auto& v : w) v /= n;
                        }},
             prior);
  return w;
}

[[nodiscard]] inline Matrix sample_features(const FeatureProcess& process, std::size_t n, std::size_t d, Rng& rng) {
  if (n == 0 || d == 0) throw InvalidInput("sample_features: n and d must be >= 1");
  validate(process);
  Matrix x(n, d);
  std::visit(overloaded{[&](const IidGaussianFeatures&) {
                          for (auto& v : x.data()) v = rng.normal();
                        },
                        [&](const GammaFeatures& f) {
                          for (auto& v : x.data()) v = sample::gamma(rng, f.alpha, f.theta);
                        },
                        [&](const Var1Features& f) {
                          for (std::size_t j = 0; j < d; ++j) x(0, j) = rng.normal();
                          for (std::size_t t = 1; t < n; ++t)
                            for (std::size_t j = 0; j < d; ++j)
                              x(t, j) = f.rho * x(t - 1, j) + f.sigma_innov * rng.normal();
                        }},
             process);
  return x;
}

[[nodiscard]] inline Vector sample_noise(const NoiseModel& model, std::size_t n, Rng& rng) {
  if (n == 0) throw InvalidInput("sample_noise: n must be >= 1");
  validate(model);
  Vector e(n, 0.0);
  std::visit(overloaded{[&](const NoNoise&) {},
                        [&](const GaussianNoise& m) {
                          for (auto& v : e) v = m.sigma * rng.normal();
                        },
                        [&](const BernoulliNoise& m) {
                          for (auto& v : e) v = sample::bernoulli(rng, m.p) ? 1.0 : 0.0;
                        },
                        [&](const ExponentialNoise& m) {
                          for (auto& v : e) v = sample::exponential(rng, m.lambda);
                        },
                        [&](const GammaNoise& m) {
                          for (auto& v : e) v = sample::gamma(rng, m.alpha, m.theta);
                        },
                        [&](const PoissonNoise& m) {
                          for (auto& v : e) v = static_cast<double>(sample::poisson(rng, m.lambda));
                        },
                        [&](const StudentTNoise& m) {
                          for (auto& v : e) v = sample::student_t(rng, m.nu);
                        }},
             model.family);
  if (model.scale != 1.0)
    for (auto& v : e) v *= model.scale;
  return e;
}

/// Variance of one unscaled draw; +inf when it does not exist.
[[nodiscard]] inline double family_variance(const NoiseFamily& family) {
  return std::visit(overloaded{[](const NoNoise&) { return 0.0; },
                               [](const GaussianNoise& m) { return m.sigma * m.sigma; },
                               [](const BernoulliNoise& m) { return m.p * (1.0 - m.p); },
                               [](const ExponentialNoise& m) { return 1.0 / (m.lambda * m.lambda); },
                               [](const GammaNoise& m) { return m.alpha * m.theta * m.theta; },
                               [](const PoissonNoise& m) { return m.lambda; },
                               [](const StudentTNoise& m) {
                                 return m.nu > 2.0 ? m.nu / (m.nu - 2.0)
                                                   : std::numeric_limits<double>::infinity();
                               }},
                    family);
}

/// Returns `model` with its scale chosen so that Var(scale·ε) = target_variance.
[[nodiscard]] inline NoiseModel calibrate_noise(const NoiseModel& model, double target_variance) {
  if (!(target_variance > 0.0) || !std::isfinite(target_variance))
    throw InvalidInput("calibrate_noise: target variance must be finite and > 0");
  validate(model);
  const double var = family_variance(model.family);
  if (!std::isfinite(var)) {
    throw UnsupportedCalibration("calibrate_noise: " + kind_name(model.family) +
                                 " noise has infinite variance");
  }
  if (var == 0.0) throw UnsupportedCalibration("calibrate_noise: noise family 'none' cannot be scaled");
  NoiseModel out = model;
  out.scale = std::sqrt(target_variance / var);
  return out;
}

// ---------------------------------------------------------------------------
// Tasks and prompts

struct TaskConfig {
  std::size_t d = 5;
  std::size_t k = 11;
  CoefficientPrior prior = GaussianPrior{};
  FeatureProcess features = IidGaussianFeatures{};
  NoiseModel noise{};
  std::uint64_t seed = 0;

  void validate() const {
    if (d == 0) throw InvalidInput("task.d must be >= 1");
    if (k == 0) throw InvalidInput("task.k must be >= 1");
    icl::validate(prior);
    icl::validate(features);
    icl::validate(noise);
  }
  friend bool operator==(const TaskConfig&, const TaskConfig&) = default;
};

/// One regression problem: k context rows plus the query row (k+1 rows).
struct TaskInstance {
  Vector w;
  Matrix x;
  Vector eps;
  Vector y;

  [[nodiscard]] std::size_t dim() const noexcept { return w.size(); }
  [[nodiscard]] std::size_t rows() const noexcept { return x.rows(); }
  /// Noise-free label w·x_i.
  [[nodiscard]] double clean_target(std::size_t i) const { return dot(w, x.row(i)); }

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

/// Assembles y = Xw + ε from already-sampled pieces.
[[nodiscard]] inline TaskInstance compose_task(Vector w, Matrix x, Vector eps) {
  if (x.cols() != w.size() || x.rows() != eps.size()) throw InvalidInput("compose_task: shape mismatch");
  Vector y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) y[i] = dot(x.row(i), w) + eps[i];
  return TaskInstance{std::move(w), std::move(x), std::move(eps), std::move(y)};
}

/// Zeroes feature columns d_active..d-1.
[[nodiscard]] inline Matrix mask_features(Matrix x, std::size_t d_active) {
  if (d_active > x.cols()) throw InvalidInput("mask_features: active dimension exceeds column count");
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = d_active; j < r.size(); ++j) r[j] = 0.0;
  }
  return x;
}

/// Samples w, then X (k+1 rows), then ε from the stream seeded by cfg.seed.
/// When `d_active` < d the features are masked before labels are formed, so
/// masked coordinates never reach y.
[[nodiscard]] inline TaskInstance build_task(const TaskConfig& cfg, std::size_t d_active) {
  cfg.validate();
  Rng rng(cfg.seed);
  Vector w = sample_coefficients(cfg.prior, cfg.d, rng);
  Matrix x = sample_features(cfg.features, cfg.k + 1, cfg.d, rng);
  Vector eps = sample_noise(cfg.noise, cfg.k + 1, rng);
  if (d_active < cfg.d) x = mask_features(std::move(x), d_active);
  return compose_task(std::move(w), std::move(x), std::move(eps));
}

[[nodiscard]] inline TaskInstance build_task(const TaskConfig& cfg) { return build_task(cfg, cfg.d); }

/// Interleaved prompt [x_1, y_1, ..., x_t, y_t, x_{t+1}]. Each y-token carries
/// the label in coordinate 0 and zeros elsewhere.
struct PromptSequence {
  Matrix tokens;                              ///< (2t+1) × d
  std::vector<std::size_t> query_positions;   ///< token index of every x-token
  Vector targets;                             ///< y_j aligned with query_positions

  [[nodiscard]] std::size_t length() const noexcept { return tokens.rows(); }
  [[nodiscard]] std::size_t dim() const noexcept { return tokens.cols(); }
};

[[nodiscard]] inline PromptSequence assemble_prompt(const TaskInstance& task, std::size_t t) {
  if (t < 1 || t + 1 > task.rows()) {
    throw InvalidInput("assemble_prompt: t=" + std::to_string(t) + " outside [1, " +
                       std::to_string(task.rows() - 1) + "]");
  }
  const std::size_t d = task.dim();
  PromptSequence p;
  p.tokens = Matrix(2 * t + 1, d);
  p.query_positions.reserve(t + 1);
  p.targets.reserve(t + 1);
  for (std::size_t i = 0; i <= t; ++i) {
    auto xi = task.x.row(i);
    std::copy(xi.begin(), xi.end(), p.tokens.row(2 * i).begin());
    p.query_positions.push_back(2 * i);
    p.targets.push_back(task.y[i]);
    if (i < t) p.tokens(2 * i + 1, 0) = task.y[i];
  }
  return p;
}

}  // namespace icl
