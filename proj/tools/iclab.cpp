// iclab: train, evaluate, sweep, plot and reproduce in-context regression
// experiments.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "icl/commands.hpp"

namespace {

void add_common(CLI::App* app, icl::CommandOptions& o, std::string& config, std::string& out, std::uint64_t& seed,
                bool with_checkpoint, std::string& checkpoint, const char* checkpoint_help) {
  app->add_option("--config", config, "TOML config file, or a provenance.json from an earlier run")->check(CLI::ExistingFile);
  app->add_option("--set", o.overrides, "override one key, e.g. --set train.total_steps=10 (repeatable)")
      ->allow_extra_args(false);
  app->add_option("--out", out, "output directory (default: output.dir)");
  app->add_option("--seed", seed, "sets task.seed, train.seed and eval.seed");
  app->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  if (with_checkpoint) app->add_option("--checkpoint", checkpoint, checkpoint_help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context linear regression laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(icl::kArtifactVersion));

  icl::CommandOptions o;
  std::string config, out, checkpoint;
  std::uint64_t seed = 0;

  auto* train = app.add_subcommand("train", "train a transformer with the curriculum");
  add_common(train, o, config, out, seed, true, checkpoint, "resume from this checkpoint");

  auto* eval = app.add_subcommand("eval", "compare estimators across context lengths");
  add_common(eval, o, config, out, seed, true, checkpoint, "trained model for the transformer method");

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "run eval once per value of one config key");
  add_common(sweep, o, config, out, seed, true, checkpoint, "trained model for the transformer method");
  sweep->add_option("--param", param, "dotted config key")->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  std::vector<std::string> csvs;
  std::string svg, title, scale = "auto", stat = "median";
  auto* plot = app.add_subcommand("plot", "render curves CSVs to an SVG chart");
  plot->add_option("csv", csvs, "curves.csv files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", svg, "SVG path")->required();
  plot->add_option("--title", title);
  plot->add_option("--scale", scale, "auto, linear or log")->check(CLI::IsMember({"auto", "linear", "log"}));
  plot->add_option("--stat", stat, "median (with CI band) or mean")->check(CLI::IsMember({"median", "mean"}));

  std::string preset;
  bool baselines_only = false, list = false;
  auto* repro = app.add_subcommand("reproduce", "run a named experiment preset");
  add_common(repro, o, config, out, seed, false, checkpoint, "");
  repro->add_option("preset", preset, "preset name");
  repro->add_flag("--baselines-only", baselines_only, "skip training; evaluate classical estimators only");
  repro->add_flag("--list", list, "print the available presets");

  CLI11_PARSE(app, argc, argv);

  if (!config.empty()) o.config = config;
  if (!out.empty()) o.out = out;
  if (!checkpoint.empty()) o.checkpoint = checkpoint;
  for (auto* sub : {train, eval, sweep, repro})
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;

  try {
    if (train->parsed()) return icl::cmd_train(o);
    if (eval->parsed()) return icl::cmd_eval(o);
    if (sweep->parsed()) return icl::cmd_sweep(o, param, values);
    if (plot->parsed()) {
      icl::PlotOptions po;
      po.title = title;
      po.use_median = stat == "median";
      po.scale = scale == "log" ? icl::YScale::log : scale == "linear" ? icl::YScale::linear : icl::YScale::automatic;
      std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
      return icl::cmd_plot(paths, svg, po);
    }
    if (repro->parsed()) {
      if (list || preset.empty()) {
        for (const auto& p : icl::presets()) std::cout << p.name << "\t" << p.description << "\n";
        return preset.empty() && !list ? 1 : 0;
      }
      return icl::cmd_reproduce(o, preset, baselines_only);
    }
  } catch (const icl::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
