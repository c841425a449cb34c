#include "quasivar/solvers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "quasivar/errors.hpp"
#include "quasivar/io.hpp"
#include "quasivar/minres.hpp"

namespace quasivar {

void SolverConfig::validate() const {
  if (!(tol_grad > 0.0)) throw DomainError("tol_grad must be positive");
  if (!(distinct_tol > 10.0 * tol_grad)) throw DomainError("distinct_tol must exceed 10 tol_grad");
  if (max_iter < 1) throw DomainError("max_iter must be at least 1");
  if (!(shrink > 0.0 && shrink < 1.0)) throw DomainError("shrink must lie in (0, 1)");
  if (!(armijo > 0.0 && armijo < 0.5)) throw DomainError("armijo must lie in (0, 0.5)");
  if (max_backtracks < 1) throw DomainError("max_backtracks must be at least 1");
  if (!(deflation_power > 0.0) || !(deflation_shift > 0.0))
    throw DomainError("deflation power and shift must be positive");
  if (n_starts < 1) throw DomainError("n_starts must be at least 1");
  if (wave_size < 1) throw DomainError("wave_size must be at least 1");
  if (threads < 1) throw DomainError("threads must be at least 1");
  if (!(trivial_tol > 0.0)) throw DomainError("trivial_tol must be positive");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::LineSearchFailure: return "line_search_failure";
    case SolveStatus::OutOfRange: return "out_of_range";
    case SolveStatus::Collapsed: return "collapsed";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Problem {
  const ProblemParams& params;
  const Space& space;
  const DualTransform& T;

  double eval(const Field& v, Field& g) const {
    return energy_and_gradient(params, space, T, v, g);
  }
  double J(const Field& v) const { return energy(params, space, T, v).total; }
  /// Energy, or +inf when v leaves the transform table.
  double J_or_inf(const Field& v) const {
    try {
      return J(v);
    } catch (const RangeError&) {
      return kInf;
    }
  }
  double sup_bound(const Field& v) const {
    double s = 0.0;
    for (int j = 0; j < v.dim(); ++j) s += std::abs(v.coeffs[j]) * space.basis_sup(j + 1);
    return s;
  }
};

// Pairs {w, -w} repel through M(v) = prod_w (|v-w|^-p + s)(|v+w|^-p + s).
struct Deflation {
  const std::vector<Field>& points;
  double power;
  double shift;

  double factor(const Field& v) const {
    double m = 1.0;
    for (const Field& w : points) {
      m *= std::pow((v.coeffs - w.coeffs).norm(), -power) + shift;
      m *= std::pow((v.coeffs + w.coeffs).norm(), -power) + shift;
    }
    return m;
  }

  Eigen::VectorXd grad_log(const Field& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.dim());
    for (const Field& w : points) {
      for (double sgn : {-1.0, 1.0}) {
        const Eigen::VectorXd d = v.coeffs + sgn * w.coeffs;
        const double r = d.norm();
        const double a = std::pow(r, -power) + shift;
        out -= power * std::pow(r, -power - 2.0) / a * d;
      }
    }
    return out;
  }
};

CriticalPoint finish(const Problem& pb, const Field& v, SolveStatus status, int iterations) {
  CriticalPoint cp;
  cp.v = v;
  cp.status = status;
  cp.iterations = iterations;
  try {
    Field g;
    cp.energy = pb.eval(v, g);
    cp.grad_norm = g.norm();
    cp.quasi_residual = quasilinear_residual(pb.params, pb.space, pb.T, v);
  } catch (const RangeError&) {
    cp.status = SolveStatus::OutOfRange;
    cp.energy = cp.grad_norm = cp.quasi_residual = std::numeric_limits<double>::quiet_NaN();
  }
  return cp;
}

bool near_trivial(const Field& v, const SolverConfig& cfg) {
  return v.norm() <= 1e-3 * cfg.trivial_tol;
}

}  // namespace

CriticalPoint descend(const ProblemParams& params, const Space& space, const DualTransform& T,
                      const Field& v0, const SolverConfig& cfg) {
  const Problem pb{params, space, T};
  Field v = v0;
  Field g;
  double J;
  try {
    J = pb.eval(v, g);
  } catch (const RangeError&) {
    return finish(pb, v, SolveStatus::OutOfRange, 0);
  }
  Field v_prev, g_prev;
  double alpha = 1.0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (g.norm() <= cfg.tol_grad) return finish(pb, v, SolveStatus::Converged, it);
    // The origin has zero gradient; stepping onto it is allowed when it does not raise J.
    if (near_trivial(v, cfg) && J >= 0.0) return finish(pb, Field::zero(v.dim()), SolveStatus::Converged, it);
    if (it > 0) {
      const Eigen::VectorXd s = v.coeffs - v_prev.coeffs;
      const Eigen::VectorXd y = g.coeffs - g_prev.coeffs;
      const double sy = s.dot(y);
      alpha = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-10, 1e10) : std::min(2.0 * alpha, 1e10);
    }
    const double gg = g.coeffs.squaredNorm();
    bool accepted = false;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, alpha *= cfg.shrink) {
      Field trial{v.coeffs - alpha * g.coeffs};
      Field g_trial;
      double J_trial;
      try {
        J_trial = pb.eval(trial, g_trial);
      } catch (const RangeError&) {
        continue;
      }
      if (J_trial <= J - cfg.armijo * alpha * gg) {
        v_prev = v;
        g_prev = g;
        v = trial;
        g = g_trial;
        J = J_trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(pb, v, SolveStatus::LineSearchFailure, it);
  }
  return finish(pb, v, g.norm() <= cfg.tol_grad ? SolveStatus::Converged : SolveStatus::MaxIterations,
                cfg.max_iter);
}

CriticalPoint newton(const ProblemParams& params, const Space& space, const DualTransform& T,
                     const Field& v0, const SolverConfig& cfg, const std::vector<Field>& deflate) {
  const Problem pb{params, space, T};
  const Deflation defl{deflate, cfg.deflation_power, cfg.deflation_shift};
  Field v = v0;
  Field g;
  try {
    pb.eval(v, g);
  } catch (const RangeError&) {
    return finish(pb, v, SolveStatus::OutOfRange, 0);
  }

  auto merit = [&](const Field& x, Field& gx) {
    try {
      pb.eval(x, gx);
    } catch (const RangeError&) {
      return kInf;
    }
    return defl.factor(x) * gx.norm();
  };

  const int K = v.dim();
  for (int it = 0; it < cfg.max_iter; ++it) {
    const double gn = g.norm();
    if (gn <= cfg.tol_grad) return finish(pb, v, SolveStatus::Converged, it);
    // Inside the trivial ball Newton only crawls: the Hessian is singular at 0 for q < 2.
    if (v.norm() <= cfg.trivial_tol) return finish(pb, v, SolveStatus::Collapsed, it);

    const double scale = 1e-7 * (1.0 + v.norm());
    const LinearOperator H = [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
      const double dn = d.norm();
      if (dn == 0.0) return Eigen::VectorXd::Zero(K);
      const double eps = scale / dn;
      Field gp;
      pb.eval(Field{v.coeffs + eps * d}, gp);
      return (gp.coeffs - g.coeffs) / eps;
    };

    Eigen::VectorXd step;
    try {
      const double eta = std::max(1e-10, std::min(1e-2, gn));
      step = minres(H, -g.coeffs, eta, 4 * K).x;
    } catch (const RangeError&) {
      return finish(pb, v, SolveStatus::OutOfRange, it);
    }
    if (!deflate.empty()) {
      const double denom = 1.0 - defl.grad_log(v).dot(step);
      if (std::abs(denom) > 1e-8) step /= denom;
    }

    const double phi0 = defl.factor(v) * gn;
    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt < cfg.max_backtracks && step.allFinite(); ++bt, t *= cfg.shrink) {
      Field trial{v.coeffs + t * step};
      Field gt;
      if (merit(trial, gt) <= (1.0 - cfg.armijo * t) * phi0) {
        v = trial;
        g = gt;
        accepted = true;
        break;
      }
    }
    if (accepted) continue;

    // Fallback: steepest descent on |M grad J|^2 / 2, whose gradient is
    // M (M H g + grad M |g|^2).
    Eigen::VectorXd dir;
    try {
      const double M = defl.factor(v);
      dir = -M * (M * H(g.coeffs) + M * defl.grad_log(v) * g.coeffs.squaredNorm());
    } catch (const RangeError&) {
      return finish(pb, v, SolveStatus::OutOfRange, it);
    }
    const double dn = dir.norm();
    if (!(dn > 0.0) || !std::isfinite(dn)) return finish(pb, v, SolveStatus::LineSearchFailure, it);
    dir *= std::max(1.0, v.norm()) / dn;
    t = 1.0;
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, t *= cfg.shrink) {
      Field trial{v.coeffs + t * dir};
      Field gt;
      if (merit(trial, gt) < phi0) {
        v = trial;
        g = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) return finish(pb, v, SolveStatus::LineSearchFailure, it);
  }
  return finish(pb, v, g.norm() <= cfg.tol_grad ? SolveStatus::Converged : SolveStatus::MaxIterations,
                cfg.max_iter);
}

namespace {

// J(rho d) on a geometric grid of rho; the grid stops where rho d would leave
// a quarter of the transform range.
std::vector<std::pair<double, double>> ray_profile(const Problem& pb, const Field& d, int points) {
  const double sup = pb.sup_bound(d);
  const double rho_hi = 0.25 * pb.T.s_max() / std::max(sup, 1e-300);
  const double rho_lo = 1e-3;
  std::vector<std::pair<double, double>> out;
  if (!(rho_hi > rho_lo)) return out;
  const double ratio = std::pow(rho_hi / rho_lo, 1.0 / (points - 1));
  double rho = rho_lo;
  for (int i = 0; i < points; ++i, rho *= ratio) {
    const double J = pb.J_or_inf(Field{rho * d.coeffs});
    if (!std::isfinite(J)) break;
    out.emplace_back(rho, J);
  }
  return out;
}

std::vector<double> ray_extrema(const Problem& pb, const Field& d) {
  const auto prof = ray_profile(pb, d, 161);
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < prof.size(); ++i) {
    const double a = prof[i - 1].second, b = prof[i].second, c = prof[i + 1].second;
    if ((b > a && b >= c) || (b < a && b <= c)) out.push_back(prof[i].first);
  }
  if (out.empty()) out.push_back(1.0);
  return out;
}

}  // namespace

Field downhill_endpoint(const ProblemParams& params, const Space& space, const DualTransform& T,
                        const Field& direction) {
  if (direction.norm() == 0.0) throw GeometryError("downhill_endpoint: zero direction");
  const Problem pb{params, space, T};
  const auto prof = ray_profile(pb, direction, 161);
  if (prof.empty()) throw GeometryError("downhill_endpoint: ray leaves the transform range");
  std::size_t top = 0;
  for (std::size_t i = 1; i < prof.size(); ++i)
    if (prof[i].second > prof[top].second) top = i;
  for (std::size_t i = top + 1; i < prof.size(); ++i)
    if (prof[i].second <= 0.0) return Field{prof[i].first * direction.coeffs};
  throw GeometryError("downhill_endpoint: J stays positive beyond the ray maximum");
}

CriticalPoint mountain_pass(const ProblemParams& params, const Space& space, const DualTransform& T,
                            const Field& v_low, const SolverConfig& cfg, int path_points) {
  if (path_points < 3) throw DomainError("mountain_pass: need at least 3 path points");
  const Problem pb{params, space, T};
  if (v_low.norm() == 0.0) throw GeometryError("mountain_pass: endpoint is the origin");
  if (pb.J(v_low) > 0.0) throw GeometryError("mountain_pass: endpoint energy is positive");

  const int P = path_points;
  std::vector<Field> path(static_cast<std::size_t>(P));
  for (int i = 0; i < P; ++i) path[i] = Field{(static_cast<double>(i) / (P - 1)) * v_low.coeffs};
  std::vector<double> E(static_cast<std::size_t>(P));
  for (int i = 0; i < P; ++i) E[i] = pb.J(path[i]);

  const double scale = std::max(1.0, v_low.norm());
  int top = 0;
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    top = static_cast<int>(std::max_element(E.begin() + 1, E.end() - 1) - E.begin());
    if (!(E[top] > 1e-14 * scale * scale))
      throw GeometryError("mountain_pass: path maximum collapsed to the trivial level");
    Field g;
    pb.eval(path[top], g);
    if (g.norm() <= 1e-3 * scale) break;

    // Lower the top node along -grad J.
    double alpha = 1.0;
    const double gg = g.coeffs.squaredNorm();
    for (int bt = 0; bt < cfg.max_backtracks; ++bt, alpha *= cfg.shrink) {
      Field trial{path[top].coeffs - alpha * g.coeffs};
      const double Jt = pb.J_or_inf(trial);
      if (Jt <= E[top] - cfg.armijo * alpha * gg) {
        path[top] = trial;
        E[top] = Jt;
        break;
      }
    }

    // Redistribute the nodes uniformly in arclength along the polygon.
    std::vector<double> arc(static_cast<std::size_t>(P), 0.0);
    for (int i = 1; i < P; ++i) arc[i] = arc[i - 1] + (path[i].coeffs - path[i - 1].coeffs).norm();
    std::vector<Field> fresh(static_cast<std::size_t>(P));
    fresh.front() = path.front();
    fresh.back() = path.back();
    int seg = 0;
    for (int i = 1; i < P - 1; ++i) {
      const double target = arc.back() * i / (P - 1);
      while (seg < P - 2 && arc[seg + 1] < target) ++seg;
      const double len = arc[seg + 1] - arc[seg];
      const double w = len > 0.0 ? (target - arc[seg]) / len : 0.0;
      fresh[i] = Field{(1.0 - w) * path[seg].coeffs + w * path[seg + 1].coeffs};
    }
    path = std::move(fresh);
    for (int i = 1; i < P - 1; ++i) E[i] = pb.J_or_inf(path[i]);
  }

  CriticalPoint cp = newton(params, space, T, path[top], cfg);
  cp.iterations += it;
  if (cp.converged() && !(cp.energy > 0.0))
    throw GeometryError("mountain_pass: polished point has nonpositive energy");
  return cp;
}

std::vector<Field> start_ensemble(const ProblemParams& params, const Space& space,
                                  const DualTransform& T, int count, std::uint64_t seed) {
  const Problem pb{params, space, T};
  const int K = space.dim();
  std::vector<Field> rays;
  for (int j = 1; j <= K && static_cast<int>(rays.size()) < count; ++j) {
    const Field d = Field::mode(K, j);
    for (double rho : ray_extrema(pb, d)) rays.push_back(Field{rho * d.coeffs});
  }

  // Random directions in Y_k, k cycling through 2..6.
  std::vector<Field> random;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int n_random = std::max(count / 3, count - static_cast<int>(rays.size()));
  for (int n = 0; static_cast<int>(random.size()) < n_random && n < 4 * n_random; ++n) {
    const int k = std::min(K, 2 + n % 5);
    Field d = Field::zero(K);
    for (int j = 0; j < k; ++j) d.coeffs[j] = normal(rng);
    d.coeffs /= d.coeffs.norm();
    for (double rho : ray_extrema(pb, d)) random.push_back(Field{rho * d.coeffs});
  }

  std::vector<Field> out;
  const int n_rays = std::min<int>(static_cast<int>(rays.size()), count - std::min<int>(count / 3, static_cast<int>(random.size())));
  out.insert(out.end(), rays.begin(), rays.begin() + n_rays);
  for (std::size_t i = 0; i < random.size() && static_cast<int>(out.size()) < count; ++i)
    out.push_back(random[i]);
  for (std::size_t i = n_rays; i < rays.size() && static_cast<int>(out.size()) < count; ++i)
    out.push_back(rays[i]);
  return out;
}

SearchResult deflated_search(const ProblemParams& params, const Space& space,
                             const DualTransform& T, const SolverConfig& cfg, int n_targets) {
  if (n_targets < 1) throw DomainError("deflated_search: n_targets must be at least 1");
  cfg.validate();
  const std::vector<Field> starts = start_ensemble(params, space, T, cfg.n_starts, cfg.rng_seed);
  const int n = static_cast<int>(starts.size());

  SearchResult out;
  std::vector<Field> found;
  for (int begin = 0; begin < n; begin += cfg.wave_size) {
    const int end = std::min(n, begin + cfg.wave_size);
    std::vector<CriticalPoint> wave(static_cast<std::size_t>(end - begin));
    const std::vector<Field> frozen = found;

    std::atomic<int> next{begin};
    auto work = [&] {
      for (int i = next++; i < end; i = next++)
        wave[i - begin] = newton(params, space, T, starts[i], cfg, frozen);
    };
    const int nthreads = std::min(cfg.threads, end - begin);
    if (nthreads <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }

    for (int i = begin; i < end; ++i) {
      CriticalPoint& cp = wave[i - begin];
      cp.start_id = i;
      out.terminal_norms.push_back(cp.v.norm());
      if (!cp.converged() || cp.v.norm() <= cfg.trivial_tol) continue;
      // Pairs: -v must pass the same test.
      Field gm;
      energy_and_gradient(params, space, T, Field{-cp.v.coeffs}, gm);
      if (gm.norm() > cfg.tol_grad) continue;
      bool distinct = true;
      for (const Field& w : found) {
        const double d = std::min((cp.v.coeffs - w.coeffs).norm(), (cp.v.coeffs + w.coeffs).norm());
        if (d < cfg.distinct_tol) distinct = false;
      }
      if (!distinct) continue;
      found.push_back(cp.v);
      out.points.push_back(cp);
    }
    out.starts_run = end;
    if (static_cast<int>(out.points.size()) >= n_targets) break;
  }
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const CriticalPoint& a, const CriticalPoint& b) { return a.energy < b.energy; });
  out.exhausted = static_cast<int>(out.points.size()) < n_targets;
  return out;
}

void write_solutions_csv(std::ostream& out, const std::vector<CriticalPoint>& points) {
  out << "id,energy,grad_norm,quasi_residual,h10_norm\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CriticalPoint& cp = points[i];
    out << i + 1 << ',' << fmt17(cp.energy) << ',' << fmt17(cp.grad_norm) << ','
        << fmt17(cp.quasi_residual) << ',' << fmt17(cp.v.norm()) << '\n';
  }
}

}  // namespace quasivar
