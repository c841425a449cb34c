#include "quasivar/galerkin.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "quasivar/errors.hpp"
#include "quasivar/io.hpp"

namespace quasivar {

using std::numbers::pi;

Field Field::mode(int K, int j, double amplitude) {
  if (j < 1 || j > K) throw IndexError("Field::mode: index out of range");
  Field u = zero(K);
  u.coeffs[j - 1] = amplitude;
  return u;
}

bool QuadratureRule::exact_to_design_degree(double L) const {
  for (int d = 0; d <= 2 * nodes_per_panel - 1; ++d) {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * std::pow(nodes[i], d);
    const double exact = std::pow(L, d + 1) / (d + 1);
    if (std::abs(sum - exact) > 1e-12 * std::max(1.0, exact)) return false;
  }
  return true;
}

namespace {

QuadratureRule composite_gauss_legendre(double L, int panels, int n) {
  // Nonnegative zeros of P_n; the rule is symmetric.
  const std::vector<double> half = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> x;
  std::vector<double> w;
  for (double z : half) {
    const double dp = boost::math::legendre_p_prime(n, z);
    const double wz = 2.0 / ((1.0 - z * z) * dp * dp);
    x.push_back(z);
    w.push_back(wz);
    if (z != 0.0) {
      x.push_back(-z);
      w.push_back(wz);
    }
  }
  std::vector<std::size_t> order(x.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });

  QuadratureRule rule;
  rule.panels = panels;
  rule.nodes_per_panel = n;
  const double h = L / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (auto i : order) {
      rule.nodes.push_back(a + 0.5 * h * (x[i] + 1.0));
      rule.weights.push_back(0.5 * h * w[i]);
    }
  }
  return rule;
}

// sin(j theta) for j = 1..K by the three-term recurrence.
void sine_table(double theta, int K, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(K));
  const double c2 = 2.0 * std::cos(theta);
  double prev = 0.0;
  double cur = std::sin(theta);
  for (int j = 0; j < K; ++j) {
    out[static_cast<std::size_t>(j)] = cur;
    const double next = c2 * cur - prev;
    prev = cur;
    cur = next;
  }
}

}  // namespace

Space::Space(double L, int K, int panels, int nodes_per_panel)
    : L_(L), K_(K), quad_(composite_gauss_legendre(L, panels, nodes_per_panel)) {
  for (int j = 1; j <= K; ++j) eig_.push_back(std::pow(j * pi / L, 2));
  const int n = static_cast<int>(quad_.nodes.size());
  weights_ = Eigen::Map<const Eigen::VectorXd>(quad_.weights.data(), n);
  values_.resize(n, K);
  derivs_.resize(n, K);
  const double amp = std::sqrt(2.0 / L);
  for (int i = 0; i < n; ++i) {
    const double x = quad_.nodes[static_cast<std::size_t>(i)];
    for (int j = 1; j <= K; ++j) {
      const double k = j * pi / L;
      values_(i, j - 1) = amp * std::sin(k * x) / k;
      derivs_(i, j - 1) = amp * std::cos(k * x);
    }
  }
}

double Space::basis_value(int j, double x) const {
  const double k = j * pi / L_;
  return std::sqrt(2.0 / L_) * std::sin(k * x) / k;
}

double Space::basis_derivative(int j, double x) const {
  return std::sqrt(2.0 / L_) * std::cos(j * pi / L_ * x);
}

double Space::basis_sup(int j) const { return std::sqrt(2.0 / L_) * L_ / (j * pi); }

double Space::evaluate(const Field& u, double x) const {
  thread_local std::vector<double> s;
  sine_table(pi * x / L_, K_, s);
  const double amp = std::sqrt(2.0 / L_);
  double sum = 0.0;
  for (int j = 0; j < K_; ++j) sum += u.coeffs[j] * s[static_cast<std::size_t>(j)] / (j + 1);
  return amp * L_ / pi * sum;
}

std::pair<double, double> Space::orthonormality_defect() const {
  const Eigen::MatrixXd gram = derivs_.transpose() * weights_.asDiagonal() * derivs_;
  double diag = 0.0;
  double off = 0.0;
  for (int i = 0; i < K_; ++i)
    for (int j = 0; j < K_; ++j) {
      if (i == j)
        diag = std::max(diag, std::abs(gram(i, i) - 1.0));
      else
        off = std::max(off, std::abs(gram(i, j)));
    }
  return {diag, off};
}

Space build_space(double L, int K, int panels, int nodes_per_panel) {
  if (!std::isfinite(L) || !(L > 0.0)) throw DomainError("build_space: L must be positive");
  if (K < 1) throw DomainError("build_space: K must be >= 1");
  if (panels < 1 || nodes_per_panel < 1)
    throw DomainError("build_space: panels and nodes_per_panel must be >= 1");
  if (static_cast<long>(panels) * nodes_per_panel < 4L * K)
    throw DomainError("build_space: panels * nodes_per_panel must be >= 4K");
  Space space(L, K, panels, nodes_per_panel);
  if (!space.quadrature().exact_to_design_degree(L))
    throw BuildError("build_space: quadrature self-test failed");
  const auto [diag, off] = space.orthonormality_defect();
  if (diag > 1e-12 || off > 1e-10)
    throw BuildError("build_space: under-resolved quadrature, orthonormality check failed (diag " +
                     fmt17(diag) + ", off-diagonal " + fmt17(off) + ")");
  return space;
}

Space build_space(double L, int K) { return build_space(L, K, 2 * K, 8); }

Norms norms(const Space& space, const Field& u, double r) {
  if (!(r >= 1.0)) throw DomainError("norms: r must be >= 1");
  const Eigen::VectorXd vals = space.synthesize(u);
  const Eigen::VectorXd& w = space.weights();
  double l2 = 0.0;
  double lr = 0.0;
  for (int i = 0; i < vals.size(); ++i) {
    const double a = std::abs(vals[i]);
    l2 += w[i] * a * a;
    lr += w[i] * std::pow(a, r);
  }
  return {u.norm(), std::sqrt(l2), std::pow(lr, 1.0 / r)};
}

std::vector<std::pair<double, double>> superlevel_intervals(const Space& space, const Field& u,
                                                            double c) {
  if (!(c > 0.0)) throw DomainError("superlevel: level must be positive");
  const double L = space.length();
  const int n = std::max(64 * space.dim(), 512);
  auto g = [&](double x) { return std::abs(space.evaluate(u, x)) - c; };
  auto crossing = [&](double a, double b, double ga) {
    while (b - a > 1e-10 * L) {
      const double m = 0.5 * (a + b);
      const double gm = g(m);
      if ((gm > 0.0) == (ga > 0.0)) {
        a = m;
        ga = gm;
      } else {
        b = m;
      }
    }
    return 0.5 * (a + b);
  };

  std::vector<std::pair<double, double>> out;
  double x0 = 0.0;
  double g0 = g(0.0);
  double start = g0 > 0.0 ? 0.0 : -1.0;
  for (int i = 1; i <= n; ++i) {
    const double x1 = L * i / n;
    const double g1 = g(x1);
    if ((g0 > 0.0) != (g1 > 0.0)) {
      const double xc = crossing(x0, x1, g0);
      if (g1 > 0.0) {
        start = xc;
      } else {
        out.emplace_back(start, xc);
        start = -1.0;
      }
    }
    x0 = x1;
    g0 = g1;
  }
  if (start >= 0.0) out.emplace_back(start, L);
  return out;
}

double superlevel_measure(const Space& space, const Field& u, double c) {
  double total = 0.0;
  for (const auto& [a, b] : superlevel_intervals(space, u, c)) total += b - a;
  return total;
}

double superlevel_integral(const Space& space, const Field& u, double c, double r) {
  const double piece = space.length() / (2.0 * space.dim());
  double total = 0.0;
  auto integrand = [&](double x) { return std::pow(std::abs(space.evaluate(u, x)), r); };
  for (const auto& [a, b] : superlevel_intervals(space, u, c)) {
    const int m = std::max(1, static_cast<int>(std::ceil((b - a) / piece)));
    const double h = (b - a) / m;
    for (int i = 0; i < m; ++i)
      total += boost::math::quadrature::gauss<double, 20>::integrate(integrand, a + i * h,
                                                                      a + (i + 1) * h);
  }
  return total;
}

double embedding_constant(const Space& space, int k, double r, std::uint64_t seed, int restarts) {
  const int K = space.dim();
  if (k < 1 || k > K) throw IndexError("embedding_constant: k out of range");
  if (!(r >= 1.0)) throw DomainError("embedding_constant: r must be >= 1");
  const int m = K - k + 1;
  const Eigen::MatrixXd V = space.values().rightCols(m);
  const Eigen::VectorXd& w = space.weights();

  auto objective = [&](const Eigen::VectorXd& y, Eigen::VectorXd* grad) {
    const Eigen::VectorXd u = V * y;
    double phi = 0.0;
    Eigen::VectorXd dens(u.size());
    for (int i = 0; i < u.size(); ++i) {
      const double a = std::abs(u[i]);
      phi += w[i] * std::pow(a, r);
      dens[i] = w[i] * r * std::pow(a, r - 1.0) * (u[i] < 0 ? -1.0 : 1.0);
    }
    if (grad) *grad = V.transpose() * dens;
    return phi;
  };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int restart = 0; restart < restarts; ++restart) {
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) y[i] = normal(rng);
    y.normalize();
    Eigen::VectorXd g;
    double phi = objective(y, &g);
    double step = 1.0 / std::max(g.norm(), 1e-300);
    for (int it = 0; it < 4000; ++it) {
      const Eigen::VectorXd tangent = g - g.dot(y) * y;
      if (tangent.norm() <= 1e-14 * g.norm()) break;
      Eigen::VectorXd trial = (y + step * tangent).normalized();
      Eigen::VectorXd g_trial;
      const double phi_trial = objective(trial, &g_trial);
      if (phi_trial > phi) {
        y = std::move(trial);
        g = std::move(g_trial);
        phi = phi_trial;
        step *= 1.5;
      } else {
        step *= 0.5;
        if (step * g.norm() < 1e-15) break;
      }
    }
    best = std::max(best, phi);
  }
  return std::pow(best, 1.0 / r);
}

std::vector<Field> sphere_sample(const Space& space, int k, int count, std::uint64_t seed) {
  if (k < 1 || k > space.dim()) throw IndexError("sphere_sample: k out of range");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Field> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    Field u = Field::zero(space.dim());
    for (int j = 0; j < k; ++j) u.coeffs[j] = normal(rng);
    u.coeffs /= u.coeffs.norm();
    out.push_back(std::move(u));
  }
  return out;
}

SubspaceConstants subspace_constants(const Space& space, int k, const std::vector<double>& r_list,
                                     double s_probe, std::uint64_t seed) {
  if (k < 1 || k > space.dim()) throw IndexError("subspace_constants: k out of range");
  if (!(s_probe > 0.0)) throw DomainError("subspace_constants: s_probe must be positive");
  SubspaceConstants out;
  out.k = k;
  double M = 0.0;
  for (int j = 1; j <= k; ++j) M = std::max(M, space.basis_sup(j));
  out.tau_k = 1.0 / (std::sqrt(static_cast<double>(k)) * M);
  out.tau_k_alt = 1.0 / ((k + 1) * M * M);
  out.alpha_k = s_probe;
  const auto sample = sphere_sample(space, k, 100, seed);
  for (double r : r_list) {
    out.theta.emplace_back(r, embedding_constant(space, k, r, seed + 1));
    double beta = std::numeric_limits<double>::infinity();
    for (const Field& u : sample)
      beta = std::min(beta, superlevel_integral(space, u, 1.0 / s_probe, r));
    out.beta.emplace_back(r, beta);
  }
  return out;
}

void write_field_csv(std::ostream& out, const Field& u) {
  out << "j,coeff\n";
  for (int j = 0; j < u.dim(); ++j) out << j + 1 << ',' << fmt17(u.coeffs[j]) << '\n';
}

Field read_field_csv(std::istream& in) {
  std::string line;
  std::vector<double> coeffs;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "j,coeff") throw DomainError("field CSV: expected header j,coeff");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("field CSV: malformed row");
    const int j = std::stoi(line.substr(0, comma));
    if (j != static_cast<int>(coeffs.size()) + 1)
      throw DomainError("field CSV: indices must run 1..K in order");
    coeffs.push_back(std::stod(line.substr(comma + 1)));
  }
  Field u;
  u.coeffs = Eigen::Map<Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  return u;
}

void write_profile_csv(std::ostream& out, const Space& space, const Field& u, int samples) {
  if (samples < 2) throw DomainError("profile: samples must be >= 2");
  out << "x,u(x)\n";
  for (int i = 0; i < samples; ++i) {
    const double x = space.length() * i / (samples - 1);
    out << fmt17(x) << ',' << fmt17(space.evaluate(u, x)) << '\n';
  }
}

}  // namespace quasivar
