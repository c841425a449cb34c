#pragma once

// Spectral Galerkin space on the interval (0, L): Dirichlet sine modes scaled
// to be orthonormal in the gradient inner product, composite Gauss-Legendre
// quadrature, norms and the finite-dimensional sphere constants.

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace quasivar {

/// Coordinates in the basis e_1..e_K (index 0 holds e_1).
struct Field {
  Eigen::VectorXd coeffs;

  static Field zero(int K) { return {Eigen::VectorXd::Zero(K)}; }
  /// amplitude * e_j, j is 1-based.
  static Field mode(int K, int j, double amplitude = 1.0);

  int dim() const { return static_cast<int>(coeffs.size()); }
  /// H^1_0 norm; exact in the gradient-orthonormal basis.
  double norm() const { return coeffs.norm(); }
};

struct QuadratureRule {
  int panels = 0;
  int nodes_per_panel = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Self-test: integrates x^d over (0, L) exactly for d <= 2*nodes_per_panel - 1.
  bool exact_to_design_degree(double L) const;
};

class Space {
 public:
  Space(double L, int K, int panels, int nodes_per_panel);

  double length() const { return L_; }
  int dim() const { return K_; }
  /// Dirichlet eigenvalue (j pi / L)^2, j is 1-based.
  double eigenvalue(int j) const { return eig_.at(static_cast<std::size_t>(j - 1)); }
  double lambda1() const { return eig_.front(); }
  const std::vector<double>& eigenvalues() const { return eig_; }
  const QuadratureRule& quadrature() const { return quad_; }
  int num_nodes() const { return static_cast<int>(quad_.nodes.size()); }
  const Eigen::VectorXd& weights() const { return weights_; }

  /// Basis values and derivatives at quadrature nodes, num_nodes x K.
  const Eigen::MatrixXd& values() const { return values_; }
  const Eigen::MatrixXd& derivatives() const { return derivs_; }

  /// e_j(x) = sqrt(2/L) sin(j pi x / L) / (j pi / L), j is 1-based.
  double basis_value(int j, double x) const;
  double basis_derivative(int j, double x) const;
  /// sup norm of e_j, attained at the crests: sqrt(2/L) L / (j pi).
  double basis_sup(int j) const;

  /// Field values at the quadrature nodes.
  Eigen::VectorXd synthesize(const Field& u) const { return values_ * u.coeffs; }
  Eigen::VectorXd synthesize_derivative(const Field& u) const { return derivs_ * u.coeffs; }
  /// Field value at an arbitrary point of [0, L].
  double evaluate(const Field& u, double x) const;

  /// Max deviation of the quadrature Gram matrix of the e_j' from the identity,
  /// split into diagonal and off-diagonal parts.
  std::pair<double, double> orthonormality_defect() const;

 private:
  double L_;
  int K_;
  std::vector<double> eig_;
  QuadratureRule quad_;
  Eigen::VectorXd weights_;
  Eigen::MatrixXd values_;
  Eigen::MatrixXd derivs_;
};

/// Throws DomainError on invalid sizes and BuildError when the quadrature
/// cannot resolve the basis (orthonormality check fails).
Space build_space(double L, int K, int panels, int nodes_per_panel);
/// Default quadrature: 4 panels per shortest wavelength (2K panels), 8 nodes each.
Space build_space(double L, int K);

struct Norms {
  double h10;
  double l2;
  double lr;
};

Norms norms(const Space& space, const Field& u, double r);

/// Maximal open intervals of [0, L] on which |u| > c.
std::vector<std::pair<double, double>> superlevel_intervals(const Space& space, const Field& u,
                                                            double c);
/// Lebesgue measure of {x : |u(x)| > c}.
double superlevel_measure(const Space& space, const Field& u, double c);
/// Integral of |u|^r over {x : |u(x)| > c}.
double superlevel_integral(const Space& space, const Field& u, double c, double r);

struct SubspaceConstants {
  int k = 0;
  /// 1 / (sqrt(k) max_{j<=k} |e_j|_inf); the sphere of Y_k scaled below it stays under 1.
  double tau_k = 0.0;
  /// 1 / ((k+1) M^2), the alternative form of the same bound; not safe in general.
  double tau_k_alt = 0.0;
  std::vector<std::pair<double, double>> theta;  // (r, theta_{r,k})
  std::vector<std::pair<double, double>> beta;   // (r, beta_k(r))
  double alpha_k = 0.0;                          // s_probe used for beta
  /// theta is a lower-bound estimate on the truncated tail span(e_k..e_K).
  const char* caveat = "theta estimated on span(e_k..e_K) of the truncated basis";
};

/// theta_{r,k}: sup of |u|_r over the unit sphere of span(e_k..e_K), by restarted
/// projected-gradient ascent (best of `restarts`).
double embedding_constant(const Space& space, int k, double r, std::uint64_t seed,
                          int restarts = 20);

SubspaceConstants subspace_constants(const Space& space, int k, const std::vector<double>& r_list,
                                     double s_probe, std::uint64_t seed = 7);

/// Deterministic sample of `count` points of the unit sphere of Y_k = span(e_1..e_k).
std::vector<Field> sphere_sample(const Space& space, int k, int count, std::uint64_t seed);

/// CSV `j,coeff` and `x,u(x)`.
void write_field_csv(std::ostream& out, const Field& u);
Field read_field_csv(std::istream& in);
void write_profile_csv(std::ostream& out, const Space& space, const Field& u, int samples);

}  // namespace quasivar
