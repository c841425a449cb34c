#pragma once

// The dual energy J(v) = 1/2 |v|^2 - (lambda/q) int |f(v)|^q - (mu/p) int |f(v)|^p,
// its gradient in Galerkin coordinates and the residual of the original
// quasilinear equation at u = f(v).

#include <optional>

#include <json.hpp>

#include "quasivar/galerkin.hpp"
#include "quasivar/transform.hpp"

namespace quasivar {

struct ProblemParams {
  double lambda = 0.0;
  double mu = 0.0;
  double q = 1.5;
  double p = 6.0;
  ThetaModel model = theta_model(ThetaKind::Star);
  /// Nominal space dimension, only used for the p < 4N/(N-2) admissibility check.
  std::optional<int> nominal_dim;

  /// Throws DomainError unless 1 < q < 4, p > max(2, q) and, with a nominal
  /// dimension N >= 3, p < 4N/(N-2).
  void validate() const;
};

struct EnergyBreakdown {
  double quadratic = 0.0;
  double concave = 0.0;
  double convex = 0.0;
  double total = 0.0;
};

nlohmann::json to_json(const EnergyBreakdown& e);

EnergyBreakdown energy(const ProblemParams& params, const Space& space, const DualTransform& T,
                       const Field& v);

/// Component j is c_j - lambda int f'(v)|f(v)|^{q-2}f(v) e_j - mu int f'(v)|f(v)|^{p-2}f(v) e_j.
/// Its Euclidean norm is the dual norm of J'(v).
Field gradient(const ProblemParams& params, const Space& space, const DualTransform& T,
               const Field& v);

/// Energy and gradient from one pass over the quadrature nodes.
double energy_and_gradient(const ProblemParams& params, const Space& space, const DualTransform& T,
                           const Field& v, Field& grad);

/// max_j |(J(v + h e_j) - J(v - h e_j)) / 2h - grad_j| / (1 + |grad_j|)
double fd_gradient_check(const ProblemParams& params, const Space& space, const DualTransform& T,
                         const Field& v, double h);

/// Euclidean norm of the weak residual of the quasilinear equation at u = f(v),
/// tested against e_1..e_K.
double quasilinear_residual(const ProblemParams& params, const Space& space, const DualTransform& T,
                            const Field& v);

}  // namespace quasivar
