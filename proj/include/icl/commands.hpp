#pragma once

// Subcommand implementations behind the iclab executable: train, eval,
// sweep, plot and reproduce. Each writes into an output directory that also
// receives provenance.json with the fully-resolved configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icl/checkpoint.hpp"
#include "icl/config.hpp"
#include "icl/eval.hpp"
#include "icl/io.hpp"
#include "icl/plot.hpp"
#include "icl/trainer.hpp"

#ifndef ICL_VERSION
#define ICL_VERSION "0.1.0"
#endif

namespace icl {

namespace fs = std::filesystem;

inline constexpr const char* kArtifactName = "iclab";
inline constexpr const char* kArtifactVersion = ICL_VERSION;

/// Options shared by every subcommand.
struct CommandOptions {
  std::optional<fs::path> config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;  ///< replaces task.seed, train.seed and eval.seed
  std::optional<fs::path> out;
  std::optional<fs::path> checkpoint;
  std::size_t jobs = 1;
  std::ostream* log = &std::cerr;
};

/// File (or defaults), then `--set` in order, then --seed / --out.
[[nodiscard]] inline ExperimentConfig resolve_config(const CommandOptions& o) {
  ExperimentConfig cfg = o.config ? load_config(*o.config) : ExperimentConfig{};
  for (const auto& s : o.overrides) apply_override(cfg, s);
  if (o.seed) {
    for (const char* k : {"task.seed", "train.seed", "eval.seed"}) cfg.set(k, static_cast<std::int64_t>(*o.seed));
  }
  if (o.out) cfg.set("output.dir", o.out->string());
  return cfg;
}

/// The output location is left out so that identical runs written to
/// different directories produce identical provenance files.
[[nodiscard]] inline nlohmann::ordered_json provenance_json(const std::string& command, const ExperimentConfig& cfg) {
  nlohmann::ordered_json conf = config_to_json(cfg);
  conf.erase("output");
  nlohmann::ordered_json j;
  j["artifact"] = kArtifactName;
  j["version"] = kArtifactVersion;
  j["command"] = command;
  j["seed"] = {{"task", cfg.get_uint("task.seed")}, {"train", cfg.get_uint("train.seed")}, {"eval", cfg.get_uint("eval.seed")}};
  j["config"] = conf;
  return j;
}

inline void write_provenance(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg) {
  write_text_file(dir / "provenance.json", dump_json(provenance_json(command, cfg)));
}

[[nodiscard]] inline std::string checkpoint_name(std::uint64_t step) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "ckpt_%llu.bin", static_cast<unsigned long long>(step));
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainOutcome {
  fs::path dir;
  fs::path final_checkpoint;
  std::uint64_t steps = 0;
};

/// Trains into `dir`. With `resume`, training continues from that checkpoint
/// and metrics rows at or after its step are rewritten.
inline TrainOutcome run_train(const ExperimentConfig& cfg, const fs::path& dir, const std::optional<fs::path>& resume,
                              std::size_t jobs, std::ostream& log) {
  TrainConfig tc = train_config(cfg);
  tc.jobs = jobs;
  fs::create_directories(dir);

  ModelState state;
  if (resume) {
    if (!fs::exists(*resume)) throw ConfigError("resume checkpoint not found: " + resume->string());
    state = read_checkpoint_file(*resume);
    if (state.params.config != tc.model)
      throw ConfigError("checkpoint " + resume->string() + " was trained with a different model configuration");
  } else {
    state = init_state(tc);
  }
  const std::uint64_t start = state.step;

  std::vector<MetricRow> kept;
  const fs::path metrics_path = dir / "metrics.csv";
  if (resume && fs::exists(metrics_path)) {
    for (const auto& r : parse_metrics_csv(read_text_file(metrics_path), metrics_path.string()))
      if (r.step < start) kept.push_back(r);
  }
  {
    std::string text = metrics_header();
    for (const auto& r : kept) text += metrics_row(r);
    write_text_file(metrics_path, text);
  }
  write_provenance(dir, "train", cfg);

  std::ofstream metrics(metrics_path, std::ios::binary | std::ios::app);
  TrainHooks hooks;
  hooks.on_log = [&](const MetricRow& r) {
    metrics << metrics_row(r);
    metrics.flush();
    log << "step " << r.step << "  d_cur=" << r.d_cur << "  k_cur=" << r.k_cur << "  loss=" << format_real(r.loss) << "\n";
  };
  fs::path last;
  hooks.on_checkpoint = [&](const ModelState& s) {
    last = dir / checkpoint_name(s.step);
    write_checkpoint_file(last, s);
  };
  TrainResult res = train(tc, std::move(state), hooks);
  metrics.close();
  const fs::path final_path = dir / "model.bin";
  write_checkpoint_file(final_path, res.state);
  log << "trained " << (res.state.step - start) << " steps; final checkpoint " << final_path.string() << "\n";
  return {dir, final_path, res.state.step};
}

inline int cmd_train(const CommandOptions& o) {
  const ExperimentConfig cfg = resolve_config(o);
  run_train(cfg, cfg.get_string("output.dir"), o.checkpoint, o.jobs, *o.log);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

inline EvalResult run_eval(const ExperimentConfig& cfg, const fs::path& dir, std::size_t jobs, std::ostream& log) {
  EvalSpec spec = eval_spec(cfg);
  spec.jobs = jobs;
  const auto methods = resolve_methods(spec);
  const EvalResult res = compare(spec, methods);
  fs::create_directories(dir);
  write_text_file(dir / "curves.csv", curves_csv(res.curves));
  nlohmann::ordered_json j;
  j["spec"] = eval_spec_json(spec);
  j["normalization"] = {{"mode", to_string(spec.normalize)}, {"divisor", res.divisor}};
  j["curves"] = curves_json(res);
  j["summary"] = summary_json(res);
  write_text_file(dir / "curves.json", dump_json(j));
  write_provenance(dir, "eval", cfg);
  log << "evaluated " << methods.size() << " methods x " << spec.k_values.size() << " context lengths x " << spec.n_trials
      << " trials -> " << (dir / "curves.csv").string() << "\n";
  return res;
}

inline int cmd_eval(const CommandOptions& o) {
  ExperimentConfig cfg = resolve_config(o);
  if (o.checkpoint) cfg.set("eval.checkpoint", o.checkpoint->string());
  run_eval(cfg, cfg.get_string("output.dir"), o.jobs, *o.log);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

inline int cmd_sweep(const CommandOptions& o, const std::string& param, const std::vector<std::string>& values) {
  if (!find_key(param)) throw ConfigError("sweep: unknown key '" + param + "'");
  if (values.empty()) throw ConfigError("sweep: no values given");
  ExperimentConfig base = resolve_config(o);
  if (o.checkpoint) base.set("eval.checkpoint", o.checkpoint->string());
  const fs::path root = base.get_string("output.dir");
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& v : values) {
    ExperimentConfig cfg = base;
    apply_override(cfg, param + "=" + v);
    const std::string sub = param + "=" + v;
    if (sub.find('/') != std::string::npos) throw ConfigError("sweep: value '" + v + "' cannot name a directory");
    run_eval(cfg, root / sub, o.jobs, *o.log);
    runs.push_back({{"value", v}, {"dir", sub}});
  }
  nlohmann::ordered_json manifest;
  manifest["artifact"] = kArtifactName;
  manifest["version"] = kArtifactVersion;
  manifest["param"] = param;
  manifest["values"] = values;
  manifest["runs"] = runs;
  write_text_file(root / "sweep.json", dump_json(manifest));
  return 0;
}

// ---------------------------------------------------------------------------
// plot

inline std::string plot_files(const std::vector<fs::path>& csvs, const PlotOptions& opt) {
  if (csvs.empty()) throw ConfigError("plot: at least one curves CSV is required");
  std::vector<ErrorCurve> all;
  for (const auto& p : csvs) {
    auto curves = parse_curves_csv(read_text_file(p), p.string());
    for (auto& c : curves) {
      if (csvs.size() > 1) c.method = p.parent_path().filename().string() + "/" + c.method;
      all.push_back(std::move(c));
    }
  }
  return render_svg(all, opt);
}

inline int cmd_plot(const std::vector<fs::path>& csvs, const fs::path& out_svg, const PlotOptions& opt) {
  write_text_file(out_svg, plot_files(csvs, opt));
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce

struct PresetVariant {
  std::string label;
  std::vector<std::string> overrides;
};

struct Preset {
  std::string name;
  std::string description;
  std::vector<std::string> overrides;
  std::vector<PresetVariant> variants;  ///< empty: a single run
};

/// Desk-scale presets. Every preset uses d=5, k=11 and 2,000 training steps.
[[nodiscard]] inline const std::vector<Preset>& presets() {
  static const std::vector<std::string> common = {"task.d=5", "task.k=11", "train.total_steps=2000",
                                                  "eval.n_trials=500"};
  auto with = [](std::vector<std::string> extra) {
    std::vector<std::string> v = common;
    v.insert(v.end(), extra.begin(), extra.end());
    return v;
  };
  static const std::vector<Preset> all = {
      {"fig1a", "exponential coefficient prior, lambda=1, noiseless, l2", with({"prior.kind=exponential", "prior.exponential.lambda=1.0"}), {}},
      {"fig1b", "Laplace coefficient prior, b=1, noiseless, l2", with({"prior.kind=laplace", "prior.laplace.b=1.0"}), {}},
      {"fig1c", "unit-hypersphere coefficient prior, noiseless, l2", with({"prior.kind=unit_sphere"}), {}},
      {"fig2a", "Gamma(2, 1) features, Gaussian noise sigma=0.5, l2",
       with({"features.kind=gamma", "features.gamma.alpha=2.0", "features.gamma.theta=1.0", "noise.kind=gaussian",
             "noise.gaussian.sigma=0.5"}),
       {}},
      {"fig2b", "VAR(1) features, rho=0.4, Gaussian noise sigma=0.5, l2",
       with({"features.kind=var1", "features.var1.rho=0.4", "noise.kind=gaussian", "noise.gaussian.sigma=0.5"}), {}},
      {"fig3a", "Bernoulli noise p=0.25, l1", with({"noise.kind=bernoulli", "noise.bernoulli.p=0.25", "model.loss=l1", "eval.metric=absolute"}), {}},
      {"fig3b", "exponential noise lambda=1, l1",
       with({"noise.kind=exponential", "noise.exponential.lambda=1.0", "model.loss=l1", "eval.metric=absolute"}), {}},
      {"fig3c", "Gamma noise (2, 1), l1",
       with({"noise.kind=gamma", "noise.gamma.alpha=2.0", "noise.gamma.theta=1.0", "model.loss=l1", "eval.metric=absolute"}), {}},
      {"fig3d", "Poisson noise lambda=1, l1", with({"noise.kind=poisson", "noise.poisson.lambda=1.0", "model.loss=l1", "eval.metric=absolute"}), {}},
      {"fig3e", "Student-t noise nu=2, l1",
       with({"noise.kind=student_t", "noise.student_t.nu=2.0", "model.loss=l1", "eval.metric=absolute", "eval.n_trials=1000"}), {}},
      {"appc-gamma-features", "Gamma feature (alpha, theta) grid, noiseless, l2",
       with({"features.kind=gamma"}),
       {{"a2_t2", {"features.gamma.alpha=2.0", "features.gamma.theta=2.0"}},
        {"a3_t0.5", {"features.gamma.alpha=3.0", "features.gamma.theta=0.5"}},
        {"a4_t2", {"features.gamma.alpha=4.0", "features.gamma.theta=2.0"}},
        {"a5_t1", {"features.gamma.alpha=5.0", "features.gamma.theta=1.0"}}}},
      {"appc-var1", "VAR(1) rho grid, noiseless, l2", with({"features.kind=var1"}),
       {{"rho0.2", {"features.var1.rho=0.2"}}, {"rho0.5", {"features.var1.rho=0.5"}}, {"rho0.8", {"features.var1.rho=0.8"}}}},
      {"appc-bernoulli", "Bernoulli noise p grid, l1", with({"noise.kind=bernoulli", "model.loss=l1", "eval.metric=absolute"}),
       {{"p0.1", {"noise.bernoulli.p=0.1"}},
        {"p0.2", {"noise.bernoulli.p=0.2"}},
        {"p0.3", {"noise.bernoulli.p=0.3"}},
        {"p0.4", {"noise.bernoulli.p=0.4"}}}},
      {"appc-exponential", "exponential noise lambda grid, l1", with({"noise.kind=exponential", "model.loss=l1", "eval.metric=absolute"}),
       {{"lambda0.5", {"noise.exponential.lambda=0.5"}},
        {"lambda1.5", {"noise.exponential.lambda=1.5"}},
        {"lambda2", {"noise.exponential.lambda=2.0"}}}},
      {"appc-gamma-noise", "Gamma noise (alpha, theta) grid, l1", with({"noise.kind=gamma", "model.loss=l1", "eval.metric=absolute"}),
       {{"a2_t2", {"noise.gamma.alpha=2.0", "noise.gamma.theta=2.0"}},
        {"a3_t1", {"noise.gamma.alpha=3.0", "noise.gamma.theta=1.0"}},
        {"a4_t1", {"noise.gamma.alpha=4.0", "noise.gamma.theta=1.0"}}}},
      {"appc-poisson", "Poisson noise lambda grid, l1", with({"noise.kind=poisson", "model.loss=l1", "eval.metric=absolute"}),
       {{"lambda0.5", {"noise.poisson.lambda=0.5"}},
        {"lambda2", {"noise.poisson.lambda=2.0"}},
        {"lambda3", {"noise.poisson.lambda=3.0"}}}},
      {"appc-student-t", "Student-t noise nu in {2, 3}, l1", with({"noise.kind=student_t", "model.loss=l1", "eval.metric=absolute"}),
       {{"nu2", {"noise.student_t.nu=2.0"}}, {"nu3", {"noise.student_t.nu=3.0"}}}},
  };
  return all;
}

[[nodiscard]] inline const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string names;
  for (const auto& p : presets()) names += (names.empty() ? "" : ", ") + p.name;
  throw ConfigError("unknown preset '" + name + "' (available: " + names + ")");
}

/// Runs a preset: per variant, train then evaluate the transformer next to
/// the baselines, or baselines only. User overrides apply after the preset's.
inline int cmd_reproduce(const CommandOptions& o, const std::string& name, bool baselines_only) {
  const Preset& preset = find_preset(name);
  const std::vector<PresetVariant> variants = preset.variants.empty() ? std::vector<PresetVariant>{{"", {}}} : preset.variants;
  const fs::path root = o.out ? *o.out : fs::path("runs") / preset.name;
  for (const auto& v : variants) {
    CommandOptions vo = o;
    vo.overrides = preset.overrides;
    vo.overrides.insert(vo.overrides.end(), v.overrides.begin(), v.overrides.end());
    vo.overrides.insert(vo.overrides.end(), o.overrides.begin(), o.overrides.end());
    const fs::path dir = v.label.empty() ? root : root / v.label;
    vo.out = dir;
    ExperimentConfig cfg = resolve_config(vo);
    *o.log << "[" << preset.name << (v.label.empty() ? "" : "/" + v.label) << "] " << preset.description << "\n";
    if (!baselines_only) {
      const TrainOutcome t = run_train(cfg, dir / "train", std::nullopt, o.jobs, *o.log);
      auto methods = cfg.get_string_list("eval.methods");
      if (std::find(methods.begin(), methods.end(), "transformer") == methods.end()) {
        methods.insert(methods.begin(), "transformer");
        std::vector<Scalar> sl(methods.begin(), methods.end());
        cfg.set("eval.methods", sl);
      }
      cfg.set("eval.checkpoint", t.final_checkpoint.string());
    }
    run_eval(cfg, dir / "eval", o.jobs, *o.log);
    PlotOptions po;
    po.title = preset.name + (v.label.empty() ? "" : " " + v.label);
    write_text_file(dir / "curves.svg", plot_files({dir / "eval" / "curves.csv"}, po));
  }
  return 0;
}

}  // namespace icl
