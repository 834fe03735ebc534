#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

fs::path scratch() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / ("iclab_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run iclab(const std::string& args) {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = "cd '" + scratch().string() + "' && '" ICLAB_EXE "' " + args + " > stdout.txt 2> '" + err.string() + "'";
  const int st = std::system(cmd.c_str());
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, slurp(err)};
}

std::string stdout_text() { return slurp(scratch() / "stdout.txt"); }

// Every regular file below `dir`, relative path -> bytes.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

const std::string kTiny =
    "--set task.d=2 --set task.k=4 --set model.d_model=8 --set model.n_layers=1 --set model.n_heads=2 "
    "--set train.batch_size=4 --set train.d_start=2 --set train.k_start=3 --set train.curriculum_period=10 "
    "--set train.eval_every=5";

}  // namespace

TEST_CASE("version and help") {
  CHECK(iclab("--version").code == 0);
  CHECK_THAT(stdout_text(), ContainsSubstring("0.1.0"));
  CHECK(iclab("train --help").code == 0);
  CHECK_THAT(stdout_text(), ContainsSubstring("--set"));
  CHECK(iclab("").code != 0);
}

TEST_CASE("configuration errors exit with code 2 and name the line") {
  std::ofstream(scratch() / "bad.toml") << "[task]\nd = 5\nwidth = 3\n";
  const Run r = iclab("eval --config bad.toml");
  CHECK(r.code == 2);
  CHECK_THAT(r.err, ContainsSubstring("bad.toml:3"));
  CHECK(iclab("eval --set task.nope=1").code == 2);
  CHECK(iclab("eval --set eval.methods=transformer --out e0").code == 2);
  CHECK(iclab("eval --set noise.kind=student_t --set noise.target_variance=1 --out e0").code == 2);
  CHECK(iclab("reproduce nosuchpreset").code == 2);
  CHECK(iclab("eval --config missing.toml").code != 0);
}

TEST_CASE("train is deterministic, resumable and feeds eval") {
  const std::string train = "train " + kTiny + " --set train.total_steps=20 --set train.checkpoint_every=10 --seed 5";
  REQUIRE(iclab(train + " --out t1").code == 0);
  REQUIRE(iclab(train + " --out t2").code == 0);
  const auto a = tree(scratch() / "t1");
  CHECK(a == tree(scratch() / "t2"));
  for (const char* f : {"metrics.csv", "provenance.json", "ckpt_10.bin", "ckpt_20.bin", "model.bin"}) CHECK(a.count(f) == 1);
  CHECK(a.at("ckpt_20.bin") == a.at("model.bin"));
  CHECK(a.at("metrics.csv").rfind("step,d_cur,k_cur,loss\n0,2,3,", 0) == 0);

  // resume the second run from its midpoint and compare every file
  REQUIRE(iclab(train + " --out t2 --checkpoint t2/ckpt_10.bin").code == 0);
  CHECK(tree(scratch() / "t2") == a);

  const auto prov = nlohmann::json::parse(a.at("provenance.json"));
  CHECK(prov["command"] == "train");
  CHECK(prov["seed"]["train"] == 5);
  CHECK(prov["config"]["train"]["total_steps"] == 20);
  CHECK_FALSE(prov["config"].contains("output"));

  const std::string eval = "eval " + kTiny + " --set eval.n_trials=20 --set eval.n_boot=100 --set eval.methods=transformer,ols,l1_lp "
                           "--checkpoint t1/model.bin";
  REQUIRE(iclab(eval + " --out e1").code == 0);
  REQUIRE(iclab(eval + " --out e2").code == 0);
  CHECK(tree(scratch() / "e1") == tree(scratch() / "e2"));
  const std::string csv = slurp(scratch() / "e1/curves.csv");
  CHECK_THAT(csv, ContainsSubstring("\ntransformer,1,") && ContainsSubstring("\nl1_lp,4,"));
  const auto j = nlohmann::json::parse(slurp(scratch() / "e1/curves.json"));
  CHECK(j["curves"].size() == 3);
  CHECK(j["spec"]["n_trials"] == 20);
  CHECK(j["normalization"]["mode"] == "signal_power");
  CHECK(j["summary"].size() == 4);

  // the provenance file is itself a valid config
  REQUIRE(iclab("eval --config e1/provenance.json --out e3").code == 0);
  CHECK(slurp(scratch() / "e3/curves.csv") == csv);

  // a checkpoint for a different dimension is refused
  CHECK(iclab("eval --set task.d=3 --set eval.methods=transformer --checkpoint t1/model.bin --out e4").code == 2);
}

TEST_CASE("sweep writes one run per value and a manifest") {
  REQUIRE(iclab("sweep --set eval.n_trials=10 --set eval.n_boot=100 --set eval.methods=ols,ridge --set noise.kind=bernoulli "
                "--param noise.bernoulli.p --values 0.1,0.3 --out sw")
              .code == 0);
  CHECK(fs::exists(scratch() / "sw/noise.bernoulli.p=0.1/curves.csv"));
  CHECK(fs::exists(scratch() / "sw/noise.bernoulli.p=0.3/curves.csv"));
  const auto m = nlohmann::json::parse(slurp(scratch() / "sw/sweep.json"));
  CHECK(m["param"] == "noise.bernoulli.p");
  CHECK(m["runs"].size() == 2);
  const auto p = nlohmann::json::parse(slurp(scratch() / "sw/noise.bernoulli.p=0.3/provenance.json"));
  CHECK(p["config"]["noise"]["bernoulli"]["p"] == 0.3);
  CHECK(iclab("sweep --param task.nope --values 1 --out sw2").code == 2);

  REQUIRE(iclab("plot sw/noise.bernoulli.p=0.1/curves.csv sw/noise.bernoulli.p=0.3/curves.csv --out sw/cmp.svg --title cmp").code == 0);
  const std::string svg = slurp(scratch() / "sw/cmp.svg");
  std::size_t n = 0;
  for (std::size_t at = svg.find("class=\"series\""); at != std::string::npos; at = svg.find("class=\"series\"", at + 1)) ++n;
  CHECK(n == 4);
  CHECK_THAT(svg, ContainsSubstring("noise.bernoulli.p=0.3/ridge"));
}

TEST_CASE("reproduce lists presets and runs baselines") {
  REQUIRE(iclab("reproduce --list").code == 0);
  for (const char* p : {"fig1a", "fig2b", "fig3e", "appc-poisson"}) CHECK_THAT(stdout_text(), ContainsSubstring(p));
  REQUIRE(iclab("reproduce fig3e --baselines-only --set eval.n_trials=20 --set eval.n_boot=100 --out r").code == 0);
  CHECK(fs::exists(scratch() / "r/eval/curves.csv"));
  CHECK(fs::exists(scratch() / "r/curves.svg"));
  const auto j = nlohmann::json::parse(slurp(scratch() / "r/eval/provenance.json"));
  CHECK(j["config"]["noise"]["kind"] == "student_t");
  CHECK(j["config"]["eval"]["metric"] == "absolute");
  CHECK(j["config"]["eval"]["n_trials"] == 20);

  REQUIRE(iclab("reproduce appc-var1 --baselines-only --set eval.n_trials=10 --set eval.n_boot=100 --out rv").code == 0);
  for (const char* v : {"rho0.2", "rho0.5", "rho0.8"}) CHECK(fs::exists(scratch() / "rv" / v / "curves.svg"));
}

TEST_CASE("reproduce trains then evaluates the transformer") {
  REQUIRE(iclab("reproduce fig1c --set train.total_steps=3 --set train.batch_size=2 --set model.d_model=8 --set model.n_layers=1 "
                "--set eval.n_trials=10 --set eval.n_boot=100 --out rt")
              .code == 0);
  CHECK(fs::exists(scratch() / "rt/train/model.bin"));
  CHECK_THAT(slurp(scratch() / "rt/eval/curves.csv"), ContainsSubstring("\ntransformer,"));
}
