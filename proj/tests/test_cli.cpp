#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "quasivar/cli.hpp"
#include "quasivar/errors.hpp"

using namespace quasivar;
using namespace quasivar::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("quasivar_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig cfg;
  cfg.K = 16;
  cfg.starts = 16;
  cfg.out = out.string();
  return cfg;
}

}  // namespace

TEST(Config, SettingsAndFile) {
  RunConfig cfg;
  apply_setting(cfg, "lambda", "-2.5");
  apply_setting(cfg, "model", "theta_sharp");
  apply_setting(cfg, "N", "3");
  EXPECT_EQ(cfg.lambda, -2.5);
  EXPECT_EQ(cfg.model, "theta_sharp");
  EXPECT_EQ(cfg.N, 3);
  std::istringstream in("# comment\nmu = 4\n\n  K=24  # trailing\nempirical = true\n");
  apply_config_file(cfg, in, "a.cfg");
  EXPECT_EQ(cfg.mu, 4.0);
  EXPECT_EQ(cfg.K, 24);
  EXPECT_TRUE(cfg.empirical);
}

TEST(Config, ErrorsCiteLine) {
  RunConfig cfg;
  std::istringstream in("mu = 4\nbogus = 1\n");
  try {
    apply_config_file(cfg, in, "b.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("b.cfg:2: "), std::string::npos) << e.what();
  }
  std::istringstream bad("K = 1.5\n");
  EXPECT_THROW(apply_config_file(cfg, bad, "c.cfg"), ConfigError);
  std::istringstream noeq("lambda 3\n");
  EXPECT_THROW(apply_config_file(cfg, noeq, "d.cfg"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "lambda", "abc"), ConfigError);
}

TEST(Config, DescribeRoundTrips) {
  RunConfig cfg;
  cfg.lambda = 0.1;
  cfg.mu = 2.0 / 3.0;
  cfg.model = "theta_dagger";
  cfg.N = 5;
  cfg.out = "/somewhere";
  const std::string text = describe(cfg);
  EXPECT_EQ(text.find("out="), std::string::npos);
  EXPECT_NE(text.find("lambda=0.1 "), std::string::npos);
  RunConfig back;
  std::istringstream words(text);
  std::string w;
  while (words >> w) {
    const auto eq = w.find('=');
    apply_setting(back, w.substr(0, eq), w.substr(eq + 1));
  }
  EXPECT_EQ(describe(back), text);
  EXPECT_EQ(back.mu, cfg.mu);
  EXPECT_FALSE(settings_help().empty());
}

TEST(Run, ThresholdsJson) {
  RunConfig cfg;
  cfg.q = 3.0;
  cfg.p = 4.0;
  std::stringstream out, log;
  ASSERT_EQ(run("thresholds", cfg, out, log), kOk) << log.str();
  const nlohmann::json j = nlohmann::json::parse(out.str());
  EXPECT_NEAR(j["thresholds"]["mu_star"].get<double>(), 3.2899, 1e-4);
  EXPECT_TRUE(j.contains("config"));
  EXPECT_TRUE(j.contains("verdicts"));
}

TEST(Run, TransformCheckPasses) {
  RunConfig cfg;
  cfg.samples = 500;
  std::stringstream out, log;
  EXPECT_EQ(run("transform-check", cfg, out, log), kOk) << log.str();
  const nlohmann::json j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j.contains("config"));
}

TEST(Run, SolveWithNonpositiveCoefficientsFindsNothing) {
  const fs::path dir = fresh_dir("solve_trivial");
  RunConfig cfg = small_config(dir);
  cfg.lambda = -1.0;
  cfg.mu = -1.0;
  cfg.p = 5.0;
  std::stringstream out, log;
  ASSERT_EQ(run("solve", cfg, out, log), kOk) << log.str();
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["pairs_found"].get<int>(), 0);
  EXPECT_TRUE(j["exhausted"].get<bool>());
  const std::string sol = slurp(dir / "solutions.csv");
  EXPECT_EQ(sol.rfind("# config: ", 0), 0u);
  EXPECT_NE(sol.find("id,energy,grad_norm,quasi_residual,h10_norm\n"), std::string::npos);
}

TEST(Run, SolveIsByteIdenticalAcrossRunsAndThreads) {
  const fs::path a = fresh_dir("solve_a");
  const fs::path b = fresh_dir("solve_b");
  RunConfig ca = small_config(a);
  RunConfig cb = small_config(b);
  cb.threads = 2;
  std::stringstream out, log;
  ASSERT_EQ(run("solve", ca, out, log), kOk) << log.str();
  ASSERT_EQ(run("solve", cb, out, log), kOk) << log.str();
  ASSERT_TRUE(fs::exists(a / "profile_1.csv"));
  ASSERT_TRUE(fs::exists(a / "coeffs_1.csv"));
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = b / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    const std::string sa = slurp(e.path());
    std::string sb = slurp(other);
    // The config line records the thread count.
    const auto swap_threads = [](std::string s) {
      const auto pos = s.find("threads=2");
      if (pos != std::string::npos) s.replace(pos, 9, "threads=1");
      return s;
    };
    EXPECT_EQ(sa, swap_threads(sb)) << e.path().filename();
    ++files;
  }
  EXPECT_GE(files, 4);
}

TEST(Run, ScanWritesCsv) {
  const fs::path dir = fresh_dir("scan");
  RunConfig cfg = small_config(dir);
  cfg.lambda_n = 4;
  cfg.mu_n = 5;
  std::stringstream out, log;
  ASSERT_EQ(run("scan", cfg, out, log), kOk) << log.str();
  std::ifstream f(dir / "scan.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line.rfind("# config: ", 0), 0u);
  std::getline(f, line);
  EXPECT_EQ(line.rfind("lambda,mu,q,p,verdicts,", 0), 0u);
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 20);
}

TEST(Run, ExitCodes) {
  const fs::path dir = fresh_dir("exit_codes");
  std::stringstream out, log;
  RunConfig cfg = small_config(dir);
  EXPECT_EQ(run("frobnicate", cfg, out, log), kConfigError);
  cfg.q = 5.0;
  EXPECT_EQ(run("solve", cfg, out, log), kConfigError);
  cfg = small_config(dir);
  cfg.model = "theta_bogus";
  EXPECT_EQ(run("thresholds", cfg, out, log), kConfigError);
  cfg = small_config(dir);
  cfg.threads = 0;
  EXPECT_EQ(run("solve", cfg, out, log), kConfigError);
  EXPECT_FALSE(fs::exists(dir / "solutions.csv"));
  // The property checks break down in double precision near s = 1e300.
  cfg = small_config(dir);
  cfg.s_max = 1e300;
  EXPECT_EQ(run("transform-check", cfg, out, log), kNumericFailure) << log.str();
}
