#pragma once

// Coefficient models theta(s) and the dual change of variable f = Upsilon^{-1},
// with Upsilon(t) = int_0^t sqrt(theta(r)) dr.

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace quasivar {

enum class ThetaKind { One, Star, Sharp, Dagger };

/// A registered coefficient model. All built-ins are even with theta >= 1.
struct ThetaModel {
  ThetaKind kind = ThetaKind::Star;
  std::string name;
  /// The alpha of lim theta(s)/s^2 = alpha^2/2; absent for the constant model.
  std::optional<double> alpha;
  /// False only for the test model theta == 1.
  bool satisfies_h3 = true;

  double value(double s) const;
  double derivative(double s) const;
};

struct ThetaValue {
  double value;
  double derivative;
};

/// Looks up a model by name: theta_one, theta_star, theta_sharp, theta_dagger.
ThetaModel theta_model(std::string_view name);
ThetaModel theta_model(ThetaKind kind);
std::vector<ThetaModel> registered_models();

/// Throws DomainError on non-finite s.
ThetaValue theta_eval(const ThetaModel& model, double s);

/// Result of sampling the structural hypotheses of a model.
struct ModelCheck {
  bool at_least_one = true;
  bool even = true;
  bool nondecreasing = true;       // theta on (0, inf)
  bool ratio_nonincreasing = true; // theta(s)/s^2 on (0, inf)
  bool limit_ok = true;            // theta(s)/s^2 -> alpha^2/2
  double limit_error = 0.0;
  bool ok() const {
    return at_least_one && even && nondecreasing && ratio_nonincreasing && limit_ok;
  }
};

ModelCheck check_theta_model(const ThetaModel& model);

/// Adaptive Gauss-Kronrod value of Upsilon(t) with absolute error <= tol.
double upsilon(const ThetaModel& model, double t, double tol);

struct FValue {
  double f;
  double f1;  // f'(s) = 1 / sqrt(theta(f(s)))
  double f2;  // f''(s) = -theta'(f(s)) / (2 theta(f(s))^2)
};

/// Tabulated inverse of Upsilon on [0, s_max], extended oddly to [-s_max, s_max].
/// Immutable once built.
class DualTransform {
 public:
  static DualTransform build(const ThetaModel& model, double s_max, double tol);

  /// f and its first two derivatives; throws RangeError when |s| > s_max.
  FValue eval(double s) const;
  double f(double s) const { return eval(s).f; }

  /// Upsilon(t) from the knot table plus a local Gauss-Legendre panel, |t| <= t_max.
  double upsilon_at(double t) const;

  const ThetaModel& model() const { return model_; }
  double s_max() const { return s_max_; }
  double t_max() const { return t_.back(); }
  double tol() const { return tol_; }
  const std::vector<double>& knots_t() const { return t_; }
  const std::vector<double>& knots_upsilon() const { return ups_; }

 private:
  DualTransform() = default;
  double invert_positive(double s) const;
  double local_integral(double a, double b) const;

  ThetaModel model_;
  double s_max_ = 0.0;
  double tol_ = 0.0;
  std::vector<double> t_;
  std::vector<double> ups_;
  std::vector<double> slope_;  // dt/dUpsilon at each knot, limited for monotonicity
};

DualTransform build_transform(const ThetaModel& model, double s_max, double tol);
FValue f_eval(const DualTransform& transform, double s);

struct PropertyCheck {
  std::string item;        // "i" .. "vi"
  std::string statement;
  bool applicable = true;
  bool passed = true;
  double margin = 0.0;     // >= 0 means satisfied, negative means violated by that much
  double worst_s = 0.0;
};

struct TransformReport {
  std::string model;
  double s_max = 0.0;
  int n_samples = 0;
  std::vector<PropertyCheck> items;  // always six entries, items (i) to (vi)
  std::optional<double> limit_estimate;  // |f(s_max)| / sqrt(s_max)
  std::optional<double> limit_expected;  // (8/alpha^2)^{1/4}
  bool all_passed() const;
};

/// Margin below which a property entry is reported as failed.
inline constexpr double kPropertySlack = 1e-10;
/// Allowed distance of |f(s_max)|/sqrt(s_max) from its limit.
inline constexpr double kLimitTolerance = 0.01;

TransformReport verify_transform(const DualTransform& transform, int n_samples);

/// CSV table `t,upsilon` with 17 significant digits.
void write_transform_csv(std::ostream& out, const DualTransform& transform);
std::vector<std::pair<double, double>> read_transform_csv(std::istream& in);

}  // namespace quasivar
