#include "quasivar/regime.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "quasivar/errors.hpp"
#include "quasivar/io.hpp"

namespace quasivar {

namespace {

constexpr double kExponentTol = 1e-12;

bool is_four(double p) { return std::abs(p - 4.0) <= kExponentTol; }

// A_r = 1 + (8/alpha^2)^{r/4}
double bracket(double alpha, double r) { return 1.0 + std::pow(8.0 / (alpha * alpha), r / 4.0); }

nlohmann::json opt(const std::optional<double>& x) {
  return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ThresholdSet& t) {
  nlohmann::json j;
  j["mu_star"] = opt(t.mu_star);
  j["lambda_star"] = opt(t.lambda_star);
  j["s_star"] = opt(t.s_star);
  j["t_star"] = opt(t.t_star);
  j["r_star"] = opt(t.r_star);
  j["r_star_q_reading"] = opt(t.r_star_q_reading);
  j["r_star_p_reading"] = opt(t.r_star_p_reading);
  j["fountain_high_ok"] = t.fountain_high_ok;
  j["p4_mu_bound"] = t.p4_mu_bound;
  j["normalization"] = "C1 = C2 = 1/lambda1";
  return j;
}

ThresholdSet thresholds(double q, double p, double alpha, double lambda1,
                        std::optional<int> nominal_dim) {
  if (!(q > 1.0 && q < 4.0)) throw DomainError("thresholds: q must lie in (1, 4)");
  if (!(p > std::max(2.0, q))) throw DomainError("thresholds: p must exceed max(2, q)");
  if (!(alpha > 0.0) || !(lambda1 > 0.0))
    throw DomainError("thresholds: alpha and lambda1 must be positive");

  ThresholdSet t;
  const double Aq = bracket(alpha, q);
  const double Ap = bracket(alpha, p);
  const bool p_le_4 = p < 4.0 || is_four(p);

  if (p > std::max(2.0, q) && p_le_4) t.mu_star = lambda1 / Ap;
  if (q < 2.0 && p > 2.0 && p_le_4)
    t.s_star = (1.0 - q / 2.0) * lambda1 / ((1.0 + q / p) * Ap);
  if (q >= 2.0) t.lambda_star = lambda1 / Aq;
  if (q >= 2.0 && p > q && p < 4.0 && !is_four(p))
    t.t_star = (1.0 - p / 4.0) * lambda1 / ((1.0 + p / (2.0 * q)) * Aq);
  if (q >= 2.0 && p > q && p_le_4) {
    t.r_star_q_reading = lambda1 / (Aq + Ap);
    t.r_star_p_reading = lambda1 / (2.0 * Ap);
    t.r_star = std::min(*t.r_star_q_reading, *t.r_star_p_reading);
  }
  if (nominal_dim) {
    const int N = *nominal_dim;
    t.fountain_high_ok = p > 4.0 && !is_four(p) && p < 4.0 * N / (N - 2);
  } else {
    t.fountain_high_ok = p > 4.0 && !is_four(p);
  }
  t.p4_mu_bound = lambda1 * alpha * alpha / 4.0;
  return t;
}

std::string to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::OnlyTrivial: return "OnlyTrivial";
    case VerdictKind::NoNonpositiveEnergySolutions: return "NoNonpositiveEnergySolutions";
    case VerdictKind::NoNonnegativeEnergySolutions: return "NoNonnegativeEnergySolutions";
    case VerdictKind::HighEnergySequence: return "HighEnergySequence";
    case VerdictKind::LowEnergySequence: return "LowEnergySequence";
    case VerdictKind::KPairsHighEnergy: return "KPairsHighEnergy";
    case VerdictKind::KPairsLowEnergy: return "KPairsLowEnergy";
    case VerdictKind::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

bool Verdict::has(VerdictKind k) const {
  return std::any_of(items.begin(), items.end(), [k](const VerdictItem& i) { return i.kind == k; });
}

std::string Verdict::str() const {
  std::string out;
  for (const VerdictItem& i : items) {
    if (!out.empty()) out += ';';
    out += to_string(i.kind) + "[" + i.provenance + "]";
  }
  return out;
}

Verdict classify(const ProblemParams& params, double lambda1) {
  Verdict v;
  const double lam = params.lambda;
  const double mu = params.mu;
  const double q = params.q;
  const double p = params.p;
  auto only = [](const char* item) { return Verdict{{{VerdictKind::OnlyTrivial, item}}}; };

  if (lam <= 0.0 && mu <= 0.0) return only("T1(i)");
  if (!(lambda1 > 0.0) || !(q > 1.0 && q < 4.0) || !(p > std::max(2.0, q)))
    return Verdict{{{VerdictKind::Unclassified, "none"}}};

  // Needs only the monotonicity hypotheses, which every registered model meets.
  if (q <= 2.0 && (p > 4.0 || is_four(p))) {
    if (lam < 0.0) v.items.push_back({VerdictKind::NoNonpositiveEnergySolutions, "T1(ii)"});
    if (mu < 0.0) v.items.push_back({VerdictKind::NoNonnegativeEnergySolutions, "T1(ii)"});
  }

  const ThetaModel& model = params.model;
  if (!model.satisfies_h3 || !model.alpha) {
    if (v.items.empty()) v.items.push_back({VerdictKind::Unclassified, "none"});
    return v;
  }
  const ThresholdSet t = thresholds(q, p, *model.alpha, lambda1, params.nominal_dim);

  // Windows where only the trivial solution exists.
  if (t.mu_star && lam < 0.0 && mu > 0.0 && mu < *t.mu_star) return only("T1(iii)");
  if (t.lambda_star && mu < 0.0 && lam > 0.0 && lam < *t.lambda_star) return only("T1(iv)");
  if (t.r_star && std::abs(lam) < *t.r_star && std::abs(mu) < *t.r_star) return only("T1(v)");

  // Energy-sign exclusions.
  if (t.s_star && lam > 0.0 && std::abs(mu) < *t.s_star)
    v.items.push_back({VerdictKind::NoNonnegativeEnergySolutions, "T1(iii)"});
  if (t.t_star && mu > 0.0 && std::abs(lam) < *t.t_star)
    v.items.push_back({VerdictKind::NoNonpositiveEnergySolutions, "T1(iv)"});

  // Existence of solution sequences or k pairs.
  if (mu > 0.0 && p > 4.0 && !is_four(p)) {
    const bool admissible = !params.nominal_dim || t.fountain_high_ok;
    if (admissible) v.items.push_back({VerdictKind::HighEnergySequence, "T3(i)"});
  }
  if (mu > 0.0 && p > std::max(2.0, q) && p < 4.0 && !is_four(p))
    v.items.push_back({VerdictKind::KPairsHighEnergy, "T3(i)"});
  if (lam > 0.0 && !is_four(p)) {
    if (q < 2.0) v.items.push_back({VerdictKind::LowEnergySequence, "T3(ii)"});
    else v.items.push_back({VerdictKind::KPairsLowEnergy, "T3(ii)"});
  }
  if (lam > 0.0 && is_four(p) && mu < t.p4_mu_bound)
    v.items.push_back({VerdictKind::KPairsLowEnergy, "T3(iii)"});

  if (v.items.empty()) v.items.push_back({VerdictKind::Unclassified, "none"});
  return v;
}

FountainRadius fountain_radius(const ProblemParams& params, const Space& space,
                               const DualTransform& T, int k, double s_probe, std::uint64_t seed) {
  if (!(params.p > 4.0) || is_four(params.p) || !(params.mu > 0.0))
    throw DomainError("fountain_radius: needs p > 4 and mu > 0");
  if (k < 1 || k > space.dim()) throw IndexError("fountain_radius: k out of range");
  if (!(s_probe > 0.0)) throw DomainError("fountain_radius: s_probe must be positive");
  const double q = params.q;
  const double p = params.p;
  const double L = space.length();
  const double l1 = space.lambda1();

  FountainRadius out;
  out.k = k;
  out.f1 = T.f(1.0);
  out.beta = std::numeric_limits<double>::infinity();
  for (const Field& u : sphere_sample(space, k, 100, seed))
    out.beta = std::min(out.beta, superlevel_integral(space, u, 1.0 / s_probe, p / 2.0));
  if (!(out.beta > 0.0))
    throw GeometryError("fountain_radius: s_probe too small, some unit fields never exceed 1/s_probe");

  // int |f(rho u)|^q is bounded by C rho^q (q <= 2) or (8/alpha^2)^{q/4} C rho^{q/2}
  // (q > 2); C comes from Hoelder and the Poincare inequality on (0, L).
  double lead;
  if (q <= 2.0) {
    out.embedding = std::pow(L, 1.0 - q / 2.0) * std::pow(l1, -q / 2.0);
    lead = 0.5 + std::abs(params.lambda) * out.embedding / q;
  } else {
    if (!params.model.alpha) throw DomainError("fountain_radius: q > 2 needs a model with alpha");
    const double alpha = *params.model.alpha;
    out.embedding = std::pow(L, 1.0 - q / 4.0) * std::pow(l1, -q / 4.0);
    lead = 0.5 + std::abs(params.lambda) * std::pow(8.0 / (alpha * alpha), q / 4.0) *
                     out.embedding / q;
  }
  const double bound =
      std::pow(p * lead / (params.mu * std::pow(out.f1, p) * out.beta), 2.0 / (p - 4.0));
  // The estimate needs rho strictly beyond each term.
  out.rho_k = 1.01 * std::max({1.0, s_probe, bound});
  return out;
}

std::vector<ScanRow> scan(const ProblemParams& base, const Space& space, const DualTransform& T,
                          const ScanRange& lambda, const ScanRange& mu, const SolverConfig& cfg,
                          bool empirical, int n_targets) {
  if (lambda.n < 2 || mu.n < 2) throw DomainError("scan: grid must be at least 2 x 2");
  if (!std::isfinite(lambda.lo) || !std::isfinite(lambda.hi) || !std::isfinite(mu.lo) ||
      !std::isfinite(mu.hi))
    throw DomainError("scan: ranges must be finite");
  base.validate();
  if (empirical) cfg.validate();

  const double l1 = space.lambda1();
  std::optional<ThresholdSet> th;
  if (base.model.alpha) th = thresholds(base.q, base.p, *base.model.alpha, l1, base.nominal_dim);

  const int n = lambda.n * mu.n;
  std::vector<ScanRow> rows(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScanRow& r = rows[i];
    ProblemParams pp = base;
    pp.lambda = lambda.at(i / mu.n);
    pp.mu = mu.at(i % mu.n);
    r.lambda = pp.lambda;
    r.mu = pp.mu;
    r.q = pp.q;
    r.p = pp.p;
    r.verdict = classify(pp, l1);
    if (th) r.thresholds = *th;
  }
  if (!empirical) return rows;

  SolverConfig cell_cfg = cfg;
  cell_cfg.threads = 1;
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      ScanRow& r = rows[i];
      ProblemParams pp = base;
      pp.lambda = r.lambda;
      pp.mu = r.mu;
      try {
        const SearchResult res = deflated_search(pp, space, T, cell_cfg, n_targets);
        r.pairs_found = static_cast<int>(res.points.size());
        if (!res.points.empty()) {
          r.min_energy = res.points.front().energy;
          r.max_energy = res.points.back().energy;
        }
      } catch (const Error& e) {
        r.error = e.what();
      }
    }
  };
  const int nthreads = std::min(cfg.threads, n);
  if (nthreads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th_ : pool) th_.join();
  }
  return rows;
}

void write_scan_csv(std::ostream& out, const std::vector<ScanRow>& rows) {
  auto cell = [](const std::optional<double>& x) { return x ? fmt17(*x) : std::string(); };
  out << "lambda,mu,q,p,verdicts,mu_star,lambda_star,s_star,t_star,r_star,pairs_found,min_energy,"
         "max_energy\n";
  for (const ScanRow& r : rows) {
    out << fmt17(r.lambda) << ',' << fmt17(r.mu) << ',' << fmt17(r.q) << ',' << fmt17(r.p) << ','
        << r.verdict.str() << ',' << cell(r.thresholds.mu_star) << ','
        << cell(r.thresholds.lambda_star) << ',' << cell(r.thresholds.s_star) << ','
        << cell(r.thresholds.t_star) << ',' << cell(r.thresholds.r_star) << ','
        << (r.pairs_found ? std::to_string(*r.pairs_found) : std::string()) << ','
        << cell(r.min_energy) << ',' << cell(r.max_energy) << '\n';
  }
}

}  // namespace quasivar
