#pragma once

// Explicit nonexistence thresholds, classification of a parameter
// point, and (lambda, mu) scans with optional empirical solution counts.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quasivar/energy.hpp"
#include "quasivar/solvers.hpp"

namespace quasivar {

/// Thresholds with the embedding constants normalized to C = 1/lambda_1.
/// A field is absent when (q, p) lies outside its window.
struct ThresholdSet {
  std::optional<double> mu_star;
  std::optional<double> lambda_star;
  std::optional<double> s_star;
  std::optional<double> t_star;
  std::optional<double> r_star;  // min of the two readings below
  std::optional<double> r_star_q_reading;  // q/4 exponent in the lambda bracket
  std::optional<double> r_star_p_reading;  // p/4 exponent in both brackets
  bool fountain_high_ok = false;
  double p4_mu_bound = 0.0;  // lambda_1 alpha^2 / 4
};

nlohmann::json to_json(const ThresholdSet& t);

/// Throws DomainError unless 1 < q < 4, p > max(2, q), alpha > 0, lambda1 > 0.
ThresholdSet thresholds(double q, double p, double alpha, double lambda1,
                        std::optional<int> nominal_dim = std::nullopt);

enum class VerdictKind {
  OnlyTrivial,
  NoNonpositiveEnergySolutions,
  NoNonnegativeEnergySolutions,
  HighEnergySequence,
  LowEnergySequence,
  KPairsHighEnergy,
  KPairsLowEnergy,
  Unclassified,
};

std::string to_string(VerdictKind k);

struct VerdictItem {
  VerdictKind kind;
  std::string provenance;  // theorem item, e.g. "T1(v)"
};

struct Verdict {
  std::vector<VerdictItem> items;

  bool has(VerdictKind k) const;
  /// Items joined by ';', each as Kind[item].
  std::string str() const;
};

/// Never throws. Every rule past T1(ii) needs a model satisfying the growth
/// hypothesis; otherwise the point is Unclassified.
Verdict classify(const ProblemParams& params, double lambda1);

/// Radius from the fountain geometry estimate for p > 4, mu > 0: J(rho u) < 0
/// for u on the unit sphere of Y_k once rho >= rho_k.
struct FountainRadius {
  int k = 0;
  double rho_k = 0.0;
  double beta = 0.0;       // beta_k(p/2) sampled at s_probe
  double embedding = 0.0;  // C with int |u|^q <= C |u|^q in H^1_0
  double f1 = 0.0;         // f(1)
};

/// Throws DomainError outside p > 4, mu > 0, and GeometryError when some
/// sampled unit field stays below 1/s_probe.
FountainRadius fountain_radius(const ProblemParams& params, const Space& space,
                               const DualTransform& T, int k, double s_probe,
                               std::uint64_t seed = 7);

struct ScanRange {
  double lo = 0.0;
  double hi = 0.0;
  int n = 2;
  double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

struct ScanRow {
  double lambda = 0.0;
  double mu = 0.0;
  double q = 0.0;
  double p = 0.0;
  Verdict verdict;
  ThresholdSet thresholds;
  std::optional<int> pairs_found;
  std::optional<double> min_energy;
  std::optional<double> max_energy;
  std::string error;  // set when the empirical solve failed for this cell
};

/// Row-major over (lambda, mu): lambda is the outer index. With `empirical`,
/// each cell runs deflated_search for `n_targets` pairs; cells run on
/// cfg.threads workers and the row order does not depend on completion order.
std::vector<ScanRow> scan(const ProblemParams& base, const Space& space, const DualTransform& T,
                          const ScanRange& lambda, const ScanRange& mu, const SolverConfig& cfg,
                          bool empirical, int n_targets = 3);

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows);

}  // namespace quasivar
