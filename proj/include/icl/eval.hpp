#pragma once

// Paired-trial comparisons of the transformer against classical estimators
// across context lengths.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "icl/checkpoint.hpp"
#include "icl/error.hpp"
#include "icl/estimators.hpp"
#include "icl/parallel.hpp"
#include "icl/random.hpp"
#include "icl/tasks.hpp"
#include "icl/transformer.hpp"

namespace icl {

enum class Metric { squared, absolute };
enum class Normalize { none, signal_power, dimension };
enum class MethodKind { transformer, ols, ridge, l1_lp, l1_admm };

[[nodiscard]] inline std::string to_string(Metric m) { return m == Metric::squared ? "squared" : "absolute"; }
[[nodiscard]] inline std::string to_string(Normalize n) {
  switch (n) {
    case Normalize::none: return "none";
    case Normalize::signal_power: return "signal_power";
    case Normalize::dimension: return "dimension";
  }
  return "none";
}
[[nodiscard]] inline std::string to_string(MethodKind k) {
  switch (k) {
    case MethodKind::transformer: return "transformer";
    case MethodKind::ols: return "ols";
    case MethodKind::ridge: return "ridge";
    case MethodKind::l1_lp: return "l1_lp";
    case MethodKind::l1_admm: return "l1_admm";
  }
  return "ols";
}

[[nodiscard]] inline Metric parse_metric(const std::string& s) {
  if (s == "squared") return Metric::squared;
  if (s == "absolute") return Metric::absolute;
  throw InvalidInput("unknown metric '" + s + "' (expected squared or absolute)");
}
[[nodiscard]] inline Normalize parse_normalize(const std::string& s) {
  if (s == "none") return Normalize::none;
  if (s == "signal_power") return Normalize::signal_power;
  if (s == "dimension") return Normalize::dimension;
  throw InvalidInput("unknown normalization '" + s + "' (expected none, signal_power or dimension)");
}
[[nodiscard]] inline MethodKind parse_method(const std::string& s) {
  for (MethodKind k : {MethodKind::transformer, MethodKind::ols, MethodKind::ridge, MethodKind::l1_lp, MethodKind::l1_admm})
    if (to_string(k) == s) return k;
  throw InvalidInput("unknown method '" + s + "' (expected transformer, ols, ridge, l1_lp or l1_admm)");
}

/// A method as it appears in a spec. `alpha` is used by ridge only.
struct MethodSpec {
  MethodKind kind = MethodKind::ols;
  double alpha = 0.01;
  [[nodiscard]] std::string name() const { return to_string(kind); }
  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct EvalSpec {
  TaskConfig task;  ///< template; task.k rows of context are sampled per trial
  std::vector<MethodSpec> methods;
  std::vector<std::size_t> k_values;
  std::size_t n_trials = 100;
  Metric metric = Metric::squared;
  Normalize normalize = Normalize::signal_power;
  std::size_t n_boot = 1000;
  std::uint64_t seed = 0;
  std::string checkpoint;  ///< required when the transformer is requested
  L1SolverConfig l1;
  std::size_t jobs = 1;

  [[nodiscard]] bool wants_transformer() const {
    return std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) { return m.kind == MethodKind::transformer; });
  }

  void validate() const {
    task.validate();
    l1.validate();
    if (n_trials == 0) throw InvalidInput("eval.n_trials must be >= 1");
    if (n_boot < 100) throw InvalidInput("eval.n_boot must be >= 100");
    if (k_values.empty()) throw InvalidInput("eval.k_values must not be empty");
    for (std::size_t k : k_values) {
      if (k < 1 || k > task.k)
        throw InvalidInput("eval.k_values entry " + std::to_string(k) + " outside [1, task.k=" + std::to_string(task.k) + "]");
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
      if (methods[i].kind == MethodKind::ridge && !(methods[i].alpha > 0.0))
        throw InvalidInput("eval.ridge_alpha must be > 0");
      for (std::size_t j = 0; j < i; ++j)
        if (methods[j].kind == methods[i].kind) throw InvalidInput("eval.methods lists '" + methods[i].name() + "' twice");
    }
  }
};

/// A method ready to run: transformer entries carry their loaded parameters.
struct Method {
  MethodSpec spec;
  std::shared_ptr<const Parameters> model;
};

[[nodiscard]] inline std::vector<Method> resolve_methods(const EvalSpec& spec) {
  std::vector<Method> out;
  std::shared_ptr<const Parameters> model;
  if (spec.wants_transformer()) {
    if (spec.checkpoint.empty()) throw ConfigError("transformer evaluation requested but no checkpoint given");
    if (!std::filesystem::exists(spec.checkpoint)) throw ConfigError("checkpoint not found: " + spec.checkpoint);
    auto st = read_checkpoint_file(spec.checkpoint);
    if (st.params.config.d_input != spec.task.d)
      throw ConfigError("checkpoint d_input=" + std::to_string(st.params.config.d_input) + " but task.d=" +
                        std::to_string(spec.task.d));
    model = std::make_shared<const Parameters>(std::move(st.params));
  }
  for (const auto& m : spec.methods) out.push_back({m, m.kind == MethodKind::transformer ? model : nullptr});
  return out;
}

[[nodiscard]] inline double apply_metric(Metric m, double diff) {
  return m == Metric::squared ? diff * diff : std::abs(diff);
}

/// errors[method][k index] for one task.
[[nodiscard]] inline std::vector<std::vector<double>> run_trial(const TaskInstance& task, std::span<const Method> methods,
                                                                std::span<const std::size_t> k_values, Metric metric,
                                                                const L1SolverConfig& l1 = {}) {
  std::vector<std::vector<double>> out(methods.size(), std::vector<double>(k_values.size()));
  if (methods.empty()) return out;
  for (std::size_t k : k_values)
    if (k < 1 || k + 1 > task.rows()) throw InvalidInput("run_trial: k=" + std::to_string(k) + " needs more task rows");
  const std::size_t d = task.dim();
  for (std::size_t j = 0; j < k_values.size(); ++j) {
    const std::size_t t = k_values[j];
    const Matrix xs = task.x.top_rows(t);
    const std::span<const double> ys(task.y.data(), t);
    const auto query = task.x.row(t);
    const double truth = task.clean_target(t);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      double pred = 0.0;
      switch (methods[m].spec.kind) {
        case MethodKind::transformer: {
          if (!methods[m].model) throw ConfigError("transformer method has no loaded checkpoint");
          const auto& p = *methods[m].model;
          if (p.config.d_input != d) throw ConfigError("checkpoint input dimension does not match the task");
          if (2 * t + 1 > p.config.max_seq)
            throw ConfigError("context length " + std::to_string(t) + " exceeds the model's max_seq");
          pred = forward(p, assemble_prompt(task, t)).back();
          break;
        }
        case MethodKind::ols: pred = dot(fit_ols(xs, ys).w_hat, query); break;
        case MethodKind::ridge: pred = dot(fit_ridge(xs, ys, methods[m].spec.alpha).w_hat, query); break;
        case MethodKind::l1_lp: pred = dot(fit_l1_lp(xs, ys, l1).w_hat, query); break;
        case MethodKind::l1_admm: pred = dot(fit_l1_admm(xs, ys, l1).w_hat, query); break;
      }
      out[m][j] = apply_metric(metric, pred - truth);
    }
  }
  return out;
}

struct CurvePoint {
  std::size_t k = 0;
  double mean = 0.0;
  double median = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n = 0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct ErrorCurve {
  std::string method;
  std::vector<CurvePoint> points;
  friend bool operator==(const ErrorCurve&, const ErrorCurve&) = default;
};

namespace detail {

[[nodiscard]] inline double sorted_median(const std::vector<double>& s) {
  const std::size_t n = s.size();
  return n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

/// Linear-interpolation percentile of sorted data, q in [0, 1].
[[nodiscard]] inline double sorted_quantile(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return s[lo] + f * (s[hi] - s[lo]);
}

}  // namespace detail

/// Mean, median and a percentile-bootstrap 95% interval for the median.
[[nodiscard]] inline CurvePoint aggregate(std::span<const double> errors, std::size_t k, std::size_t n_boot,
                                         std::uint64_t boot_seed) {
  if (errors.empty()) throw InvalidInput("aggregate: no errors");
  if (n_boot < 100) throw InvalidInput("aggregate: n_boot must be >= 100");
  CurvePoint p;
  p.k = k;
  p.n = errors.size();
  std::vector<double> s(errors.begin(), errors.end());
  double sum = 0.0;
  for (double e : s) sum += e;
  p.mean = sum / static_cast<double>(s.size());
  std::sort(s.begin(), s.end());
  p.median = detail::sorted_median(s);

  Rng rng(boot_seed);
  std::vector<double> meds(n_boot), re(s.size());
  for (auto& med : meds) {
    for (auto& v : re) v = s[rng.below(s.size())];
    std::sort(re.begin(), re.end());
    med = detail::sorted_median(re);
  }
  std::sort(meds.begin(), meds.end());
  p.ci_lo = std::min(detail::sorted_quantile(meds, 0.025), p.median);
  p.ci_hi = std::max(detail::sorted_quantile(meds, 0.975), p.median);
  return p;
}

namespace detail {

inline std::string signal_key(const TaskConfig& t) {
  std::string key = std::to_string(t.d) + "|" + kind_name(t.prior) + "|" + kind_name(t.features);
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::visit(overloaded{[&](const GaussianPrior& p) { key += num(p.sigma); }, [&](const LaplacePrior& p) { key += num(p.b); },
                        [&](const ExponentialPrior& p) { key += num(p.lambda); }, [](const UnitSpherePrior&) {}},
             t.prior);
  std::visit(overloaded{[](const IidGaussianFeatures&) {},
                        [&](const GammaFeatures& f) { key += num(f.alpha) + "," + num(f.theta); },
                        [&](const Var1Features& f) { key += num(f.rho) + "," + num(f.sigma_innov); }},
             t.features);
  return key;
}

}  // namespace detail

inline constexpr std::size_t kSignalPowerSamples = 100000;
inline constexpr std::uint64_t kSignalPowerSeed = 0x5167a1c0ffeeULL;

/// Monte Carlo estimate of E[(w·x)²] under the template's prior and the
/// marginal of the first feature row. Cached per (d, prior, features).
[[nodiscard]] inline double signal_power(const TaskConfig& task) {
  static std::mutex mu;
  static std::map<std::string, double> cache;
  const std::string key = detail::signal_key(task);
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  Rng rng(kSignalPowerSeed);
  double acc = 0.0;
  for (std::size_t i = 0; i < kSignalPowerSamples; ++i) {
    const Vector w = sample_coefficients(task.prior, task.d, rng);
    const Matrix x = sample_features(task.features, 1, task.d, rng);
    const double s = dot(w, x.row(0));
    acc += s * s;
  }
  const double v = acc / static_cast<double>(kSignalPowerSamples);
  std::lock_guard lock(mu);
  cache.emplace(key, v);
  return v;
}

[[nodiscard]] inline double normalization_divisor(Normalize mode, const TaskConfig& task) {
  switch (mode) {
    case Normalize::none: return 1.0;
    case Normalize::dimension: return static_cast<double>(task.d);
    case Normalize::signal_power: return signal_power(task);
  }
  return 1.0;
}

[[nodiscard]] inline ErrorCurve normalize_curve(ErrorCurve curve, Normalize mode, const TaskConfig& task) {
  if (mode == Normalize::none) return curve;
  const double div = normalization_divisor(mode, task);
  if (!(div > 0.0) || !std::isfinite(div)) throw NumericFailure("normalize_curve: non-positive divisor");
  for (auto& p : curve.points) {
    p.mean /= div;
    p.median /= div;
    p.ci_lo /= div;
    p.ci_hi /= div;
  }
  return curve;
}

struct SummaryRow {
  std::size_t k = 0;
  std::string best_mean;
  std::string best_median;
};

struct EvalResult {
  std::vector<ErrorCurve> curves;     ///< normalized per spec.normalize
  std::vector<SummaryRow> summary;    ///< per-k argmin over methods
  double divisor = 1.0;
};

/// Raw per-trial errors, errors[method][k index][trial].
using TrialErrors = std::vector<std::vector<std::vector<double>>>;

[[nodiscard]] inline TaskInstance eval_task(const EvalSpec& spec, std::size_t trial) {
  TaskConfig t = spec.task;
  t.seed = derive_seed(spec.seed, trial);
  return build_task(t);
}

[[nodiscard]] inline TrialErrors collect_errors(const EvalSpec& spec, std::span<const Method> methods) {
  TrialErrors errs(methods.size(), std::vector<std::vector<double>>(spec.k_values.size(), std::vector<double>(spec.n_trials)));
  parallel_for(spec.n_trials, spec.jobs, [&](std::size_t i) {
    const TaskInstance task = eval_task(spec, i);
    const auto e = run_trial(task, methods, spec.k_values, spec.metric, spec.l1);
    for (std::size_t m = 0; m < methods.size(); ++m)
      for (std::size_t j = 0; j < spec.k_values.size(); ++j) errs[m][j][i] = e[m][j];
  });
  return errs;
}

[[nodiscard]] inline EvalResult compare(const EvalSpec& spec, std::span<const Method> methods) {
  spec.validate();
  EvalResult res;
  const TrialErrors errs = collect_errors(spec, methods);
  const std::uint64_t boot_master = derive_seed(spec.seed, 0xb0075742ULL);
  for (std::size_t m = 0; m < methods.size(); ++m) {
    ErrorCurve c;
    c.method = methods[m].spec.name();
    for (std::size_t j = 0; j < spec.k_values.size(); ++j)
      c.points.push_back(aggregate(errs[m][j], spec.k_values[j], spec.n_boot,
                                   derive_seed(boot_master, m * spec.k_values.size() + j)));
    res.curves.push_back(normalize_curve(std::move(c), spec.normalize, spec.task));
  }
  res.divisor = normalization_divisor(spec.normalize, spec.task);
  if (!methods.empty()) {
    for (std::size_t j = 0; j < spec.k_values.size(); ++j) {
      std::size_t bm = 0, bd = 0;
      for (std::size_t m = 1; m < res.curves.size(); ++m) {
        if (res.curves[m].points[j].mean < res.curves[bm].points[j].mean) bm = m;
        if (res.curves[m].points[j].median < res.curves[bd].points[j].median) bd = m;
      }
      res.summary.push_back({spec.k_values[j], res.curves[bm].method, res.curves[bd].method});
    }
  }
  return res;
}

[[nodiscard]] inline EvalResult compare(const EvalSpec& spec) {
  spec.validate();
  const auto methods = resolve_methods(spec);
  return compare(spec, methods);
}

}  // namespace icl
