#pragma once

// Command-line front end. Settings are flat `key=value` pairs, from a config
// file and/or the command line (command line wins).

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace quasivar::cli {

enum ExitCode { kOk = 0, kConfigError = 2, kNumericFailure = 3 };

struct RunConfig {
  // model and domain
  std::string model = "theta_star";
  double L = 1.0;
  int K = 32;
  int panels = 0;  // 0 selects 2K
  int nodes = 8;
  // problem
  double lambda = 1.0;
  double mu = 1.0;
  double q = 1.5;
  double p = 6.0;
  std::optional<int> N;
  // transform
  double s_max = 1e6;
  double transform_tol = 1e-10;
  int samples = 10000;
  // solver
  double tol_grad = 1e-9;
  int max_iter = 400;
  double distinct_tol = 1e-4;
  int starts = 50;
  int targets = 3;
  int wave_size = 8;
  std::uint64_t seed = 1;
  int threads = 1;
  int profile_samples = 201;
  // scan
  double lambda_min = -1.0;
  double lambda_max = 1.0;
  int lambda_n = 3;
  double mu_min = -1.0;
  double mu_max = 1.0;
  int mu_n = 3;
  bool empirical = false;
  // output
  std::string out = ".";
};

/// Applies one setting; throws ConfigError on unknown keys or bad values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Reads `key = value` lines; '#' starts a comment. Errors cite `source:line`.
void apply_config_file(RunConfig& cfg, std::istream& in, const std::string& source);

/// All settings except `out` as `key=value` separated by spaces, in a fixed order.
std::string describe(const RunConfig& cfg);

/// Help text listing every key with its default.
std::string settings_help();

/// Runs one command and returns its exit code. Messages go to `log`; the
/// transform report and threshold JSON also go to `out`.
int run(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Full entry point: argument parsing, config file, environment, dispatch.
int main_entry(int argc, char** argv);

}  // namespace quasivar::cli
