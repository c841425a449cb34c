#include "quasivar/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "quasivar/energy.hpp"
#include "quasivar/errors.hpp"
#include "quasivar/galerkin.hpp"
#include "quasivar/io.hpp"
#include "quasivar/regime.hpp"
#include "quasivar/solvers.hpp"
#include "quasivar/transform.hpp"

namespace quasivar::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double parse_double(const std::string& key, const std::string& s) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(x))
    throw ConfigError(key + ": expected a finite number, got '" + s + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& s) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

// Shortest text that reads back to the same double.
std::string shortest(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, ptr) : fmt17(x);
}

struct Key {
  const char* name;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key num(const char* name, T RunConfig::*field, const char* help) {
  return {name, help,
          [name, field](RunConfig& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) c.*field = parse_double(name, v);
            else c.*field = static_cast<T>(parse_int(name, v));
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return shortest(c.*field);
            else return std::to_string(c.*field);
          }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"model", "theta_one | theta_star | theta_sharp | theta_dagger",
       [](RunConfig& c, const std::string& v) {
         theta_model(v);  // rejects unknown names
         c.model = v;
       },
       [](const RunConfig& c) { return c.model; }},
      num("L", &RunConfig::L, "interval length"),
      num("K", &RunConfig::K, "number of sine modes"),
      num("panels", &RunConfig::panels, "quadrature panels (0 = 2K)"),
      num("nodes", &RunConfig::nodes, "Gauss nodes per panel"),
      num("lambda", &RunConfig::lambda, "coefficient of the q-power"),
      num("mu", &RunConfig::mu, "coefficient of the p-power"),
      num("q", &RunConfig::q, "concave exponent, 1 < q < 4"),
      num("p", &RunConfig::p, "convex exponent, p > max(2, q)"),
      {"N", "nominal dimension for the p < 4N/(N-2) check (empty = none)",
       [](RunConfig& c, const std::string& v) {
         if (v.empty()) c.N.reset();
         else c.N = static_cast<int>(parse_int("N", v));
       },
       [](const RunConfig& c) { return c.N ? std::to_string(*c.N) : std::string(); }},
      num("s_max", &RunConfig::s_max, "transform range"),
      num("transform_tol", &RunConfig::transform_tol, "transform build tolerance"),
      num("samples", &RunConfig::samples, "transform-check sample count"),
      num("tol_grad", &RunConfig::tol_grad, "gradient norm accepted as critical"),
      num("max_iter", &RunConfig::max_iter, "iterations per start"),
      num("distinct_tol", &RunConfig::distinct_tol, "H1_0 distance separating solutions"),
      num("starts", &RunConfig::starts, "number of starting points"),
      num("targets", &RunConfig::targets, "pairs sought before stopping"),
      num("wave_size", &RunConfig::wave_size, "starts per deflation wave"),
      num("seed", &RunConfig::seed, "random seed"),
      num("threads", &RunConfig::threads, "worker threads"),
      num("profile_samples", &RunConfig::profile_samples, "points per exported profile"),
      num("lambda_min", &RunConfig::lambda_min, "scan range"),
      num("lambda_max", &RunConfig::lambda_max, "scan range"),
      num("lambda_n", &RunConfig::lambda_n, "scan grid size"),
      num("mu_min", &RunConfig::mu_min, "scan range"),
      num("mu_max", &RunConfig::mu_max, "scan range"),
      num("mu_n", &RunConfig::mu_n, "scan grid size"),
      {"empirical", "scan: also run the solver in each cell",
       [](RunConfig& c, const std::string& v) { c.empirical = parse_bool("empirical", v); },
       [](const RunConfig& c) { return std::string(c.empirical ? "true" : "false"); }},
      {"out", "output directory",
       [](RunConfig& c, const std::string& v) { c.out = v; },
       [](const RunConfig& c) { return c.out; }},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Context {
  ThetaModel model;
  Space space;
  ProblemParams params;
  SolverConfig solver;
};

Context make_context(const RunConfig& c) {
  ProblemParams params;
  params.lambda = c.lambda;
  params.mu = c.mu;
  params.q = c.q;
  params.p = c.p;
  params.model = theta_model(c.model);
  params.nominal_dim = c.N;
  params.validate();

  SolverConfig s;
  s.tol_grad = c.tol_grad;
  s.max_iter = c.max_iter;
  s.distinct_tol = c.distinct_tol;
  s.n_starts = c.starts;
  s.wave_size = c.wave_size;
  s.rng_seed = c.seed;
  s.threads = c.threads;
  s.validate();

  const int panels = c.panels > 0 ? c.panels : 2 * c.K;
  return {params.model, build_space(c.L, c.K, panels, c.nodes), params, s};
}

json report_json(const TransformReport& r) {
  json j;
  j["model"] = r.model;
  j["s_max"] = r.s_max;
  j["n_samples"] = r.n_samples;
  j["all_passed"] = r.all_passed();
  j["limit_estimate"] = r.limit_estimate ? json(*r.limit_estimate) : json(nullptr);
  j["limit_expected"] = r.limit_expected ? json(*r.limit_expected) : json(nullptr);
  json items = json::array();
  for (const PropertyCheck& c : r.items) {
    items.push_back({{"item", c.item},
                     {"statement", c.statement},
                     {"applicable", c.applicable},
                     {"passed", c.passed},
                     {"margin", c.margin},
                     {"worst_s", c.worst_s}});
  }
  j["items"] = items;
  return j;
}

// Tracks files written by a command so a failure can remove them.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const fs::path& p : written_) fs::remove(p, ec);
  }
  std::ofstream open(const std::string& name) {
    fs::create_directories(dir_);
    const fs::path path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path.string());
    written_.push_back(path);
    return f;
  }
  void commit() { committed_ = true; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

int cmd_transform_check(const RunConfig& c, std::ostream& out) {
  const DualTransform T = build_transform(theta_model(c.model), c.s_max, c.transform_tol);
  const TransformReport r = verify_transform(T, c.samples);
  json j = report_json(r);
  j["config"] = describe(c);
  out << j.dump(2) << '\n';
  return r.all_passed() ? kOk : kNumericFailure;
}

int cmd_thresholds(const RunConfig& c, std::ostream& out) {
  const Context ctx = make_context(c);
  json j;
  j["config"] = describe(c);
  j["lambda1"] = ctx.space.lambda1();
  if (ctx.model.alpha) {
    j["thresholds"] = to_json(thresholds(c.q, c.p, *ctx.model.alpha, ctx.space.lambda1(), c.N));
  } else {
    j["thresholds"] = nullptr;
  }
  j["verdicts"] = classify(ctx.params, ctx.space.lambda1()).str();
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_solve(const RunConfig& c, std::ostream& log) {
  const Context ctx = make_context(c);
  if (c.targets < 1) throw ConfigError("targets must be at least 1");
  if (c.profile_samples < 2) throw ConfigError("profile_samples must be at least 2");
  const DualTransform T = build_transform(ctx.model, c.s_max, c.transform_tol);
  const SearchResult res = deflated_search(ctx.params, ctx.space, T, ctx.solver, c.targets);

  OutputSet files(c.out);
  const std::string header = "# config: " + describe(c) + "\n";
  {
    auto f = files.open("solutions.csv");
    f << header;
    write_solutions_csv(f, res.points);
  }
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const std::string id = std::to_string(i + 1);
    auto prof = files.open("profile_" + id + ".csv");
    prof << header;
    // The exported profile is the solution u = f(v) of the original problem.
    std::ostringstream v_profile;
    write_profile_csv(v_profile, ctx.space, res.points[i].v, c.profile_samples);
    std::istringstream rows(v_profile.str());
    std::string line;
    std::getline(rows, line);
    prof << line << '\n';
    while (std::getline(rows, line)) {
      const auto comma = line.find(',');
      const double v = std::stod(line.substr(comma + 1));
      prof << line.substr(0, comma) << ',' << fmt17(T.f(v)) << '\n';
    }
    auto coeffs = files.open("coeffs_" + id + ".csv");
    coeffs << header;
    write_field_csv(coeffs, res.points[i].v);
  }

  json j;
  j["config"] = describe(c);
  j["pairs_found"] = res.points.size();
  j["exhausted"] = res.exhausted;
  j["starts_run"] = res.starts_run;
  double max_terminal = 0.0;
  for (double t : res.terminal_norms) max_terminal = std::max(max_terminal, t);
  j["max_terminal_norm"] = max_terminal;
  json energies = json::array();
  for (const CriticalPoint& cp : res.points) energies.push_back(cp.energy);
  j["energies"] = energies;
  j["verdicts"] = classify(ctx.params, ctx.space.lambda1()).str();
  if (res.points.empty())
    j["note"] = "no nontrivial point found over " + std::to_string(res.starts_run) + " starts";
  {
    auto f = files.open("summary.json");
    f << j.dump(2) << '\n';
  }
  files.commit();
  log << "solve: " << res.points.size() << " pair(s) over " << res.starts_run << " starts\n";
  return kOk;
}

int cmd_scan(const RunConfig& c, std::ostream& log) {
  const Context ctx = make_context(c);
  std::optional<DualTransform> T;
  if (c.empirical) T = build_transform(ctx.model, c.s_max, c.transform_tol);
  else T = build_transform(ctx.model, 10.0, 1e-8);  // not used without solves
  const ScanRange lr{c.lambda_min, c.lambda_max, c.lambda_n};
  const ScanRange mr{c.mu_min, c.mu_max, c.mu_n};
  const auto rows = scan(ctx.params, ctx.space, *T, lr, mr, ctx.solver, c.empirical, c.targets);
  OutputSet files(c.out);
  {
    auto f = files.open("scan.csv");
    f << "# config: " << describe(c) << '\n';
    write_scan_csv(f, rows);
  }
  files.commit();
  for (const ScanRow& r : rows)
    if (!r.error.empty())
      log << "scan: cell lambda=" << fmt17(r.lambda) << " mu=" << fmt17(r.mu) << ": " << r.error
          << '\n';
  log << "scan: " << rows.size() << " rows\n";
  return kOk;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      try {
        k.set(cfg, value);
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw ConfigError(key + ": " + e.what());
      }
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'");
}

void apply_config_file(RunConfig& cfg, std::istream& in, const std::string& source) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

std::string describe(const RunConfig& cfg) {
  std::string out;
  for (const Key& k : keys()) {
    // Where results go is not part of what was computed.
    if (std::string_view(k.name) == "out") continue;
    if (!out.empty()) out += ' ';
    out += std::string(k.name) + "=" + k.get(cfg);
  }
  return out;
}

std::string settings_help() {
  const RunConfig defaults;
  std::ostringstream s;
  s << "Settings (key=value, defaults in brackets):\n";
  for (const Key& k : keys()) {
    std::string d = k.get(defaults);
    if (d.empty()) d = "none";
    s << "  " << k.name << " [" << d << "]  " << k.help << '\n';
  }
  return s.str();
}

int run(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  try {
    if (command == "transform-check") return cmd_transform_check(cfg, out);
    if (command == "thresholds") return cmd_thresholds(cfg, out);
    if (command == "solve") return cmd_solve(cfg, log);
    if (command == "scan") return cmd_scan(cfg, log);
    log << "error: unknown command '" << command << "'\n";
    return kConfigError;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IndexError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    log << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Variational solver for a quasilinear Schroedinger problem on an interval"};
  app.footer(settings_help());
  std::string command;
  std::vector<std::string> settings;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("command", command, "transform-check | solve | scan | thresholds")->required();
  app.add_option("settings", settings, "key=value settings");
  app.add_option("--config", config_path, "flat key = value settings file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--threads", threads, "worker threads (fallback: QUASIVAR_THREADS)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  try {
    if (const char* env = std::getenv("QUASIVAR_THREADS"); env && *env)
      apply_setting(cfg, "threads", env);
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError("cannot read " + config_path);
      apply_config_file(cfg, f, config_path);
    }
    for (const std::string& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (out_dir) cfg.out = *out_dir;
    if (seed) cfg.seed = *seed;
    if (threads) apply_setting(cfg, "threads", std::to_string(*threads));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return run(command, cfg, std::cout, std::cerr);
}

}  // namespace quasivar::cli
