#pragma once

// Critical points of the dual energy: monotone descent for minimizers, a
// path-relaxation mountain pass, and deflated Newton with multi-start drivers.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "quasivar/energy.hpp"
#include "quasivar/galerkin.hpp"
#include "quasivar/transform.hpp"

namespace quasivar {

struct SolverConfig {
  double tol_grad = 1e-9;
  int max_iter = 400;
  double shrink = 0.5;      // backtracking factor
  double armijo = 1e-4;     // sufficient-decrease constant
  int max_backtracks = 40;
  double deflation_power = 2.0;
  double deflation_shift = 1.0;
  double distinct_tol = 1e-4;  // H^1_0 distance between accepted points, modulo sign
  std::uint64_t rng_seed = 1;
  int n_starts = 50;
  /// Starts per wave. The deflation set is frozen inside a wave, so results do
  /// not depend on the thread count.
  int wave_size = 8;
  int threads = 1;
  /// Points with |v| at or below this are the trivial solution.
  double trivial_tol = 1e-6;

  /// Throws DomainError on non-positive tolerances or distinct_tol <= 10 tol_grad.
  void validate() const;
};

enum class SolveStatus { Converged, MaxIterations, LineSearchFailure, OutOfRange, Collapsed };

std::string to_string(SolveStatus s);

struct CriticalPoint {
  Field v;
  double energy = 0.0;
  double grad_norm = 0.0;
  double quasi_residual = 0.0;
  int start_id = -1;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIterations;

  bool converged() const { return status == SolveStatus::Converged; }
};

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
/// Energy is nonincreasing along the iterates.
CriticalPoint descend(const ProblemParams& params, const Space& space, const DualTransform& T,
                      const Field& v0, const SolverConfig& cfg);

/// Damped Newton on grad J with MINRES on a finite-difference Hessian action.
/// `deflate` lists points w whose pairs {w, -w} repel the iteration.
CriticalPoint newton(const ProblemParams& params, const Space& space, const DualTransform& T,
                     const Field& v0, const SolverConfig& cfg,
                     const std::vector<Field>& deflate = {});

/// rho * direction with J <= 0, found by doubling rho from 1; throws GeometryError
/// when no such rho exists below the range of T.
Field downhill_endpoint(const ProblemParams& params, const Space& space, const DualTransform& T,
                        const Field& direction);

/// Mountain pass over the straight path 0 -> v_low discretized by `path_points`
/// nodes. Requires J(v_low) <= 0 and v_low != 0; throws GeometryError when the
/// path maximum collapses to the trivial level.
CriticalPoint mountain_pass(const ProblemParams& params, const Space& space, const DualTransform& T,
                            const Field& v_low, const SolverConfig& cfg, int path_points = 33);

/// Starting points: the local extrema of J along the rays e_1, e_2, ... (interleaved
/// by mode) followed by seeded random directions of Y_k, `count` in total.
std::vector<Field> start_ensemble(const ProblemParams& params, const Space& space,
                                  const DualTransform& T, int count, std::uint64_t seed);

struct SearchResult {
  std::vector<CriticalPoint> points;  // sorted by energy, one representative per pair
  bool exhausted = false;             // fewer than n_targets found
  int starts_run = 0;
  std::vector<double> terminal_norms;  // |v| where each start stopped, in start order
};

SearchResult deflated_search(const ProblemParams& params, const Space& space,
                             const DualTransform& T, const SolverConfig& cfg, int n_targets);

/// `id,energy,grad_norm,quasi_residual,h10_norm`, one row per point.
void write_solutions_csv(std::ostream& out, const std::vector<CriticalPoint>& points);

}  // namespace quasivar
