#include "quasivar/energy.hpp"

#include <cmath>
#include <string>

#include "quasivar/errors.hpp"
#include "quasivar/io.hpp"

namespace quasivar {

void ProblemParams::validate() const {
  if (!std::isfinite(lambda) || !std::isfinite(mu))
    throw DomainError("lambda and mu must be finite");
  if (!(q > 1.0 && q < 4.0)) throw DomainError("q must lie in (1, 4)");
  if (!(p > std::max(2.0, q))) throw DomainError("p must exceed max(2, q)");
  if (nominal_dim) {
    const int N = *nominal_dim;
    if (N < 3) throw DomainError("nominal dimension must be >= 3");
    if (!(p < 4.0 * N / (N - 2)))
      throw DomainError("p must be below 2*2^* = 4N/(N-2) = " + fmt17(4.0 * N / (N - 2)));
  }
}

nlohmann::json to_json(const EnergyBreakdown& e) {
  nlohmann::json j;
  j["quadratic"] = e.quadratic;
  j["concave"] = e.concave;
  j["convex"] = e.convex;
  j["total"] = e.total;
  return j;
}

namespace {

void check_inputs(const ProblemParams& params, const Space& space, const DualTransform& T,
                  const Field& v) {
  if (v.dim() != space.dim()) throw DomainError("field dimension does not match the space");
  if (params.model.kind != T.model().kind)
    throw DomainError("problem model " + params.model.name + " differs from transform model " +
                      T.model().name);
}

double sign(double x) { return x < 0.0 ? -1.0 : (x > 0.0 ? 1.0 : 0.0); }

}  // namespace

double energy_and_gradient(const ProblemParams& params, const Space& space, const DualTransform& T,
                           const Field& v, Field& grad) {
  check_inputs(params, space, T, v);
  const Eigen::VectorXd vals = space.synthesize(v);
  const Eigen::VectorXd& w = space.weights();
  const double lq = params.lambda;
  const double mp = params.mu;
  const double q = params.q;
  const double p = params.p;
  double iq = 0.0;
  double ip = 0.0;
  Eigen::VectorXd dens(vals.size());
  for (int i = 0; i < vals.size(); ++i) {
    const FValue fv = T.eval(vals[i]);
    const double a = std::abs(fv.f);
    const double aq1 = lq != 0.0 ? std::pow(a, q - 1.0) : 0.0;
    const double ap1 = mp != 0.0 ? std::pow(a, p - 1.0) : 0.0;
    iq += w[i] * aq1 * a;
    ip += w[i] * ap1 * a;
    // |f|^{r-2} f written as sign(f)|f|^{r-1}, continuous for r > 1.
    dens[i] = w[i] * fv.f1 * sign(fv.f) * (lq * aq1 + mp * ap1);
  }
  grad.coeffs = v.coeffs - space.values().transpose() * dens;
  return 0.5 * v.coeffs.squaredNorm() - lq / q * iq - mp / p * ip;
}

EnergyBreakdown energy(const ProblemParams& params, const Space& space, const DualTransform& T,
                       const Field& v) {
  check_inputs(params, space, T, v);
  const Eigen::VectorXd vals = space.synthesize(v);
  const Eigen::VectorXd& w = space.weights();
  double iq = 0.0;
  double ip = 0.0;
  for (int i = 0; i < vals.size(); ++i) {
    const double a = std::abs(T.eval(vals[i]).f);
    if (params.lambda != 0.0) iq += w[i] * std::pow(a, params.q);
    if (params.mu != 0.0) ip += w[i] * std::pow(a, params.p);
  }
  EnergyBreakdown e;
  e.quadratic = 0.5 * v.coeffs.squaredNorm();
  e.concave = params.lambda / params.q * iq;
  e.convex = params.mu / params.p * ip;
  e.total = e.quadratic - e.concave - e.convex;
  return e;
}

Field gradient(const ProblemParams& params, const Space& space, const DualTransform& T,
               const Field& v) {
  Field g;
  energy_and_gradient(params, space, T, v, g);
  return g;
}

double fd_gradient_check(const ProblemParams& params, const Space& space, const DualTransform& T,
                         const Field& v, double h) {
  if (!(h > 0.0)) throw DomainError("fd_gradient_check: h must be positive");
  const Field g = gradient(params, space, T, v);
  double worst = 0.0;
  Field probe = v;
  for (int j = 0; j < v.dim(); ++j) {
    probe.coeffs[j] = v.coeffs[j] + h;
    const double up = energy(params, space, T, probe).total;
    probe.coeffs[j] = v.coeffs[j] - h;
    const double down = energy(params, space, T, probe).total;
    probe.coeffs[j] = v.coeffs[j];
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g.coeffs[j]) / (1.0 + std::abs(g.coeffs[j])));
  }
  return worst;
}

double quasilinear_residual(const ProblemParams& params, const Space& space, const DualTransform& T,
                            const Field& v) {
  check_inputs(params, space, T, v);
  const Eigen::VectorXd vals = space.synthesize(v);
  const Eigen::VectorXd dvals = space.synthesize_derivative(v);
  const Eigen::VectorXd& w = space.weights();
  const ThetaModel& model = params.model;
  Eigen::VectorXd flux(vals.size());    // weight * theta(u) u'
  Eigen::VectorXd source(vals.size());  // weight * (theta'(u) u'^2 / 2 - g(u))
  for (int i = 0; i < vals.size(); ++i) {
    const FValue fv = T.eval(vals[i]);
    const double u = fv.f;
    const double du = fv.f1 * dvals[i];
    const double a = std::abs(u);
    double rhs = 0.0;
    if (params.lambda != 0.0) rhs += params.lambda * sign(u) * std::pow(a, params.q - 1.0);
    if (params.mu != 0.0) rhs += params.mu * sign(u) * std::pow(a, params.p - 1.0);
    flux[i] = w[i] * model.value(u) * du;
    source[i] = w[i] * (0.5 * model.derivative(u) * du * du - rhs);
  }
  const Eigen::VectorXd r =
      space.derivatives().transpose() * flux + space.values().transpose() * source;
  return r.norm();
}

}  // namespace quasivar
