// Drives the docp binary end to end through std::system.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DOCP_CLI_PATH;
const std::string kSamples = DOCP_SAMPLES_DIR;

int exit_code(int status) { return WIFEXITED(status) ? WEXITSTATUS(status) : -1; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("docp_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + kCli + " " + args + " >" + (dir_ / "stdout.txt").string() + " 2>" +
                            (dir_ / "stderr.txt").string();
    return exit_code(std::system(cmd.c_str()));
  }

  std::string write_config(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  fs::path dir_;
};

const char* kSmallRun = R"({
  "problem": {"kind": "quadratic", "h": [1.0, 3.0], "noise_std_grad": 0.1},
  "optimizer": {"key": "diag_ocp", "lr": 0.05},
  "max_steps": 20, "n_seeds": 3,
  "sweep": {"coarse_grid": [0.1, 0.01]},
  "compare": {"optimizers": ["diag_ocp", "sgd"], "heatmap_step": 10}
})";

}  // namespace

TEST_F(Cli, RunWritesRunsAndSummary) {
  const auto cfg = write_config("c.json", kSmallRun);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "out").string() + " --seed 4"), 0);
  const auto runs = slurp(dir_ / "out" / "runs.csv");
  EXPECT_EQ(runs.rfind("run_id,optimizer,lr,mu,seed,step,train_loss,val_loss,grad_norm_sq,step_norm,rho,safeguard_count\r\n", 0), 0u);
  EXPECT_EQ(slurp(dir_ / "out" / "summary.csv").rfind("optimizer,lr,final_train,final_val,min_val,min_val_step,diverged\r\n", 0),
            0u);
}

TEST_F(Cli, SeedFlagOverridesConfig) {
  const auto cfg = write_config("c.json", kSmallRun);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "a").string() + " --seed 1"), 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "b").string() + " --seed 2"), 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + (dir_ / "c").string() + " --seed 1"), 0);
  EXPECT_NE(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "c" / "summary.csv"));
}

TEST_F(Cli, JsonFormat) {
  const auto cfg = write_config("c.json", kSmallRun);
  ASSERT_EQ(run("run --format json --config " + cfg + " --out " + (dir_ / "j").string()), 0);
  const auto j = nlohmann::json::parse(slurp(dir_ / "j" / "runs.json"));
  EXPECT_EQ(j.size(), 3u);
  EXPECT_EQ(j[0]["optimizer"], "diag_ocp");
}

TEST_F(Cli, CompareIsReproducibleAcrossThreadCounts) {
  const auto cfg = write_config("c.json", kSmallRun);
  ASSERT_EQ(run("compare --config " + cfg + " --out " + (dir_ / "a").string() + " --threads 1"), 0);
  ASSERT_EQ(run("compare --config " + cfg + " --out " + (dir_ / "b").string(), "DOCP_THREADS=3"), 0);
  EXPECT_EQ(slurp(dir_ / "a" / "summary.csv"), slurp(dir_ / "b" / "summary.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "heatmap.csv"), slurp(dir_ / "b" / "heatmap.csv"));
  for (const char* f : {"runs.csv", "sweep.csv", "sweep_runs.csv", "sweep_summary.csv", "heatmap.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
}

TEST_F(Cli, SweepAndAblate) {
  const auto cfg = write_config("c.json", kSmallRun);
  ASSERT_EQ(run("sweep --config " + cfg + " --out " + (dir_ / "s").string()), 0);
  EXPECT_EQ(slurp(dir_ / "s" / "sweep.csv").rfind("optimizer,stage,lr,final_val,min_val,min_val_step,n_diverged,selected\r\n", 0),
            0u);
  ASSERT_EQ(run("ablate-mu --config " + cfg + " --out " + (dir_ / "m").string()), 0);
  EXPECT_NE(slurp(dir_ / "m" / "runs.csv").find("mu=9.9999999999999998e-13"), std::string::npos);
}

TEST_F(Cli, VerifyLemma1AndHutchinson) {
  ASSERT_EQ(run("verify lemma1 --out " + dir_.string()), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir_ / "verify_lemma1.json"))["pass"].get<bool>());
  ASSERT_EQ(run("verify hutchinson --out " + dir_.string()), 0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir_ / "verify_hutchinson.json"))["pass"].get<bool>());
}

TEST_F(Cli, ErrorsAreOneJsonLineWithNonzeroExit) {
  const auto bad = write_config("bad.json", R"({"optimizer": {"key": "shampoo"}})");
  EXPECT_EQ(run("run --config " + bad + " --out " + dir_.string()), 1);
  const auto err = nlohmann::json::parse(slurp(dir_ / "stderr.txt"));
  EXPECT_EQ(err["error"], "contract");
  EXPECT_NE(err["message"].get<std::string>().find("shampoo"), std::string::npos);

  EXPECT_EQ(run("run --config /nonexistent.json"), 1);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "stderr.txt"))["error"], "usage");
  EXPECT_EQ(run("verify"), 2);
}

TEST_F(Cli, SampleConfigsLoad) {
  ASSERT_EQ(run("run --config " + kSamples + "/run_quadratic.json --out " + (dir_ / "q").string()), 0);
}
