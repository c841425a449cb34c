#pragma once

#include <functional>

#include <Eigen/Dense>

namespace quasivar {

using LinearOperator = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct MinresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double residual = 0.0;  // estimate of |b - A x|
  bool converged = false;
};

/// MINRES (Paige-Saunders) for symmetric, possibly indefinite A.
/// Stops when |b - A x| <= rtol |b| or after max_iter iterations.
MinresResult minres(const LinearOperator& A, const Eigen::VectorXd& b, double rtol, int max_iter);

}  // namespace quasivar
