#include "quasivar/transform.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "quasivar/errors.hpp"
#include "quasivar/io.hpp"

namespace quasivar {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::gauss_kronrod;

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Running sum with Neumaier compensation; the knot table accumulates thousands
// of panel integrals of very different sizes.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

constexpr double kInitialSpacing = 0.02;
constexpr int kMaxRefinements = 12;
constexpr std::size_t kMaxKnots = 20'000'000;

}  // namespace

double ThetaModel::value(double s) const {
  switch (kind) {
    case ThetaKind::One:
      return 1.0;
    case ThetaKind::Star:
      return 1.0 + 2.0 * s * s;
    case ThetaKind::Sharp: {
      const double s2 = s * s;
      return 1.0 + s2 / (2.0 * (1.0 + s2)) + s2;
    }
    case ThetaKind::Dagger:
      return 1.0 + softplus(s * s);
  }
  return 1.0;
}

double ThetaModel::derivative(double s) const {
  switch (kind) {
    case ThetaKind::One:
      return 0.0;
    case ThetaKind::Star:
      return 4.0 * s;
    case ThetaKind::Sharp: {
      const double d = 1.0 + s * s;
      return s / (d * d) + 2.0 * s;
    }
    case ThetaKind::Dagger:
      return 2.0 * s * logistic(s * s);
  }
  return 0.0;
}

ThetaModel theta_model(ThetaKind kind) {
  switch (kind) {
    case ThetaKind::One:
      return {kind, "theta_one", std::nullopt, false};
    case ThetaKind::Star:
      return {kind, "theta_star", 2.0, true};
    case ThetaKind::Sharp:
      return {kind, "theta_sharp", std::sqrt(2.0), true};
    case ThetaKind::Dagger:
      return {kind, "theta_dagger", std::sqrt(2.0), true};
  }
  throw DomainError("unknown theta model");
}

ThetaModel theta_model(std::string_view name) {
  for (const auto& m : registered_models())
    if (m.name == name) return m;
  throw DomainError("unknown theta model '" + std::string(name) +
                    "' (expected theta_one, theta_star, theta_sharp or theta_dagger)");
}

std::vector<ThetaModel> registered_models() {
  return {theta_model(ThetaKind::One), theta_model(ThetaKind::Star),
          theta_model(ThetaKind::Sharp), theta_model(ThetaKind::Dagger)};
}

ThetaValue theta_eval(const ThetaModel& model, double s) {
  if (!std::isfinite(s)) throw DomainError("theta_eval: non-finite argument");
  return {model.value(s), model.derivative(s)};
}

ModelCheck check_theta_model(const ThetaModel& model) {
  constexpr double kSlack = 1e-12;
  ModelCheck check;
  double prev_value = model.value(0.0);
  double prev_ratio = std::numeric_limits<double>::infinity();
  if (prev_value < 1.0) check.at_least_one = false;
  constexpr int n = 400;
  for (int i = 0; i < n; ++i) {
    const double s = std::pow(10.0, -3.0 + 7.0 * i / (n - 1));
    const double v = model.value(s);
    if (!(v >= 1.0)) check.at_least_one = false;
    if (std::abs(v - model.value(-s)) > kSlack * std::max(1.0, v)) check.even = false;
    if (v < prev_value - kSlack) check.nondecreasing = false;
    const double ratio = v / (s * s);
    if (ratio > prev_ratio + kSlack) check.ratio_nonincreasing = false;
    prev_value = v;
    prev_ratio = ratio;
  }
  if (model.satisfies_h3) {
    if (!model.alpha) {
      check.limit_ok = false;
    } else {
      const double big = 1e4;
      const double a = *model.alpha;
      check.limit_error = std::abs(model.value(big) / (big * big) - a * a / 2.0);
      check.limit_ok = check.limit_error <= 1e-6;
    }
  }
  return check;
}

double upsilon(const ThetaModel& model, double t, double tol) {
  if (!std::isfinite(t) || t < 0.0) throw DomainError("upsilon: t must be finite and >= 0");
  if (!(tol > 0.0)) throw DomainError("upsilon: tol must be positive");
  if (t == 0.0) return 0.0;
  auto integrand = [&](double r) { return std::sqrt(model.value(r)); };
  // Boost's tolerance is relative to the L1 norm, which is not known up front;
  // tighten it until the absolute error estimate meets tol.
  double error = 0.0;
  double l1 = 0.0;
  double rel = std::max(tol / std::max(t, 1.0), 1e-15);
  double value = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    value = gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 30, rel, &error, &l1);
    if (error <= tol || rel <= 1e-15) break;
    rel = std::max(0.5 * rel * tol / error, 1e-15);
  }
  if (!(error <= tol) && error > 4.0 * std::numeric_limits<double>::epsilon() * l1)
    throw NumericError("upsilon: quadrature did not converge, error estimate " +
                           fmt17(error),
                       error);
  return value;
}

double DualTransform::local_integral(double a, double b) const {
  auto integrand = [this](double r) { return std::sqrt(model_.value(r)); };
  return gauss<double, 10>::integrate(integrand, a, b);
}

DualTransform DualTransform::build(const ThetaModel& model, double s_max, double tol) {
  if (!std::isfinite(s_max) || !(s_max > 0.0))
    throw DomainError("build_transform: s_max must be finite and positive");
  if (!std::isfinite(tol) || !(tol > 0.0))
    throw DomainError("build_transform: tol must be finite and positive");
  const ModelCheck check = check_theta_model(model);
  if (!check.ok())
    throw BuildError("build_transform: model " + model.name +
                     " fails its sampled hypotheses");

  auto integrand = [&model](double r) { return std::sqrt(model.value(r)); };

  double spacing = kInitialSpacing;
  for (int attempt = 0; attempt <= kMaxRefinements; ++attempt, spacing *= 0.5) {
    DualTransform tr;
    tr.model_ = model;
    tr.s_max_ = s_max;
    tr.tol_ = tol;
    tr.t_.push_back(0.0);
    tr.ups_.push_back(0.0);
    CompensatedSum total;
    double t = 0.0;
    // Upsilon(t) >= t, so the loop ends no later than t = s_max.
    while (tr.ups_.back() < s_max) {
      if (tr.t_.size() >= kMaxKnots)
        throw BuildError("build_transform: t_max growth stalled below s_max");
      const double h = spacing * std::max(t, 1.0);
      double err = 0.0;
      const double piece =
          gauss_kronrod<double, 21>::integrate(integrand, t, t + h, 0, 0.0, &err);
      total.add(piece);
      t += h;
      tr.t_.push_back(t);
      tr.ups_.push_back(total.value());
    }

    // Hermite slopes dt/dUpsilon with the Fritsch-Carlson limiter.
    const std::size_t n = tr.t_.size();
    tr.slope_.resize(n);
    for (std::size_t i = 0; i < n; ++i) tr.slope_[i] = 1.0 / std::sqrt(model.value(tr.t_[i]));
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double secant = (tr.t_[i + 1] - tr.t_[i]) / (tr.ups_[i + 1] - tr.ups_[i]);
      const double a = tr.slope_[i] / secant;
      const double b = tr.slope_[i + 1] / secant;
      const double r2 = a * a + b * b;
      if (r2 > 9.0) {
        const double tau = 3.0 / std::sqrt(r2);
        tr.slope_[i] = tau * a * secant;
        tr.slope_[i + 1] = tau * b * secant;
      }
    }

    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double s_mid = 0.5 * (tr.ups_[i] + tr.ups_[i + 1]);
      const double h = tr.ups_[i + 1] - tr.ups_[i];
      const double d0 = tr.slope_[i] * h;
      const double d1 = tr.slope_[i + 1] * h;
      const double guess = 0.5 * (tr.t_[i] + tr.t_[i + 1]) + 0.125 * (d0 - d1);
      const double err = std::abs(tr.ups_[i] + tr.local_integral(tr.t_[i], guess) - s_mid);
      // Below a few ulps of s the comparison is pure rounding.
      const double floor = 16.0 * std::numeric_limits<double>::epsilon() * s_mid;
      worst = std::max(worst, err - floor);
    }
    if (worst < tol) return tr;
  }
  throw BuildError("build_transform: interpolation error above tol after refinement");
}

double DualTransform::invert_positive(double s) const {
  if (s == 0.0) return 0.0;
  const auto it = std::upper_bound(ups_.begin(), ups_.end(), s);
  std::size_t i = static_cast<std::size_t>(it - ups_.begin());
  i = std::clamp<std::size_t>(i, 1, ups_.size() - 1) - 1;
  const double t0 = t_[i];
  const double t1 = t_[i + 1];
  const double h = ups_[i + 1] - ups_[i];
  const double x = (s - ups_[i]) / h;
  const double x2 = x * x;
  const double x3 = x2 * x;
  double t = (2 * x3 - 3 * x2 + 1) * t0 + (x3 - 2 * x2 + x) * h * slope_[i] +
             (-2 * x3 + 3 * x2) * t1 + (x3 - x2) * h * slope_[i + 1];
  t = std::clamp(t, t0, t1);
  // Newton polish of Upsilon(t) = s.
  for (int it_count = 0; it_count < 4; ++it_count) {
    const double residual = ups_[i] + local_integral(t0, t) - s;
    const double step = residual / std::sqrt(model_.value(t));
    t = std::clamp(t - step, t0, t1);
    if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(t, 1e-300))
      break;
  }
  return t;
}

FValue DualTransform::eval(double s) const {
  if (!std::isfinite(s)) throw DomainError("f_eval: non-finite argument");
  const double a = std::abs(s);
  if (a > s_max_)
    throw RangeError("f_eval: |s| = " + fmt17(a) + " exceeds s_max = " + fmt17(s_max_) +
                     "; rebuild the transform with a larger s_max");
  const double t = invert_positive(a);
  const double f = std::copysign(t, s);
  const double th = model_.value(t);
  const double dth = model_.derivative(f);
  return {f, 1.0 / std::sqrt(th), -dth / (2.0 * th * th)};
}

double DualTransform::upsilon_at(double t) const {
  const double a = std::abs(t);
  if (!(a <= t_.back())) throw RangeError("upsilon_at: |t| exceeds t_max");
  const auto it = std::upper_bound(t_.begin(), t_.end(), a);
  std::size_t i = static_cast<std::size_t>(it - t_.begin());
  i = std::clamp<std::size_t>(i, 1, t_.size()) - 1;
  return std::copysign(ups_[i] + local_integral(t_[i], a), t);
}

DualTransform build_transform(const ThetaModel& model, double s_max, double tol) {
  return DualTransform::build(model, s_max, tol);
}

FValue f_eval(const DualTransform& transform, double s) { return transform.eval(s); }

bool TransformReport::all_passed() const {
  return std::all_of(items.begin(), items.end(),
                     [](const PropertyCheck& c) { return !c.applicable || c.passed; });
}

namespace {

// Tracks the smallest margin seen and where it occurred.
struct MarginTracker {
  double margin = std::numeric_limits<double>::infinity();
  double where = 0.0;
  void update(double m, double s) {
    if (m < margin) {
      margin = m;
      where = s;
    }
  }
};

PropertyCheck finish(std::string item, std::string statement, const MarginTracker& m) {
  PropertyCheck c;
  c.item = std::move(item);
  c.statement = std::move(statement);
  c.margin = m.margin;
  c.worst_s = m.where;
  c.passed = std::isfinite(m.margin) && m.margin >= -kPropertySlack;
  return c;
}

}  // namespace

TransformReport verify_transform(const DualTransform& transform, int n_samples) {
  if (n_samples < 100) throw DomainError("verify_transform: n_samples must be >= 100");
  const double s_max = transform.s_max();
  const ThetaModel& model = transform.model();

  // Log-spaced positive half; the negative half mirrors it.
  const int half = n_samples / 2;
  const double s_lo = std::min(1e-4, 1e-6 * s_max);
  std::vector<double> pos(half);
  for (int i = 0; i < half; ++i)
    pos[i] = s_lo * std::pow(s_max / s_lo, static_cast<double>(i) / (half - 1));
  pos.back() = s_max;
  std::vector<double> grid;
  grid.reserve(2 * half + 1);
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) grid.push_back(-*it);
  grid.push_back(0.0);
  for (double s : pos) grid.push_back(s);

  std::vector<FValue> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = transform.eval(grid[i]);

  TransformReport report;
  report.model = model.name;
  report.s_max = s_max;
  report.n_samples = static_cast<int>(grid.size());

  // (i) strictly increasing, and f'' agrees with a difference quotient of f'.
  {
    constexpr double kCurvatureTol = 1e-6;
    MarginTracker m;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
      m.update((vals[i + 1].f - vals[i].f) / (grid[i + 1] - grid[i]), grid[i]);
    for (std::size_t i = 1; i + 1 < grid.size(); i += 7) {
      const double s = grid[i];
      if (s == 0.0) continue;
      const double h = 1e-5 * std::abs(s);
      if (std::abs(s) + h > s_max) continue;
      const double fd = (transform.eval(s + h).f1 - transform.eval(s - h).f1) / (2.0 * h);
      const double scale = std::abs(vals[i].f2) + vals[i].f1 / std::max(std::abs(s), 1.0);
      m.update(kCurvatureTol - std::abs(fd - vals[i].f2) / scale, s);
    }
    report.items.push_back(finish("i", "f increasing with f'' = -theta'(f)/(2 theta(f)^2)", m));
  }
  // (ii) 0 < f' <= 1.
  {
    MarginTracker m;
    for (std::size_t i = 0; i < grid.size(); ++i)
      m.update(std::min(vals[i].f1, 1.0 - vals[i].f1), grid[i]);
    report.items.push_back(finish("ii", "0 < f'(s) <= 1", m));
  }
  // (iii) f(s)/s -> 1/sqrt(theta(0)).
  {
    constexpr double kLimitTol = 1e-6;
    MarginTracker m;
    const double target = 1.0 / std::sqrt(model.value(0.0));
    const double ratio = transform.eval(s_lo).f / s_lo;
    m.update(kLimitTol - std::abs(ratio - target), s_lo);
    report.items.push_back(finish("iii", "f(s)/s -> 1/sqrt(theta(0)) as s -> 0", m));
  }
  // (iv) |f(s)| <= |s|.
  {
    MarginTracker m;
    for (std::size_t i = 0; i < grid.size(); ++i)
      m.update(std::abs(grid[i]) - std::abs(vals[i].f), grid[i]);
    report.items.push_back(finish("iv", "|f(s)| <= |s|", m));
  }
  // (v) |f|/2 <= f'|s| < |f| and |f|/sqrt|s| nondecreasing in |s|.
  {
    MarginTracker m;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double s = std::abs(grid[i]);
      if (s == 0.0) continue;
      const double af = std::abs(vals[i].f);
      const double lhs = vals[i].f1 * s;
      m.update(std::min(lhs - 0.5 * af, af - lhs), grid[i]);
    }
    double prev = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const double r = std::abs(vals[half + 1 + k].f) / std::sqrt(pos[k]);
      m.update(r - prev, pos[k]);
      prev = r;
    }
    report.items.push_back(
        finish("v", "|f|/2 <= f'(s)|s| < |f| and |f(s)|/sqrt|s| nondecreasing", m));
  }
  // (vi) |f(s)|/sqrt|s| -> (8/alpha^2)^{1/4}, bounded by it everywhere.
  {
    const double est = std::abs(vals.back().f) / std::sqrt(s_max);
    report.limit_estimate = est;
    if (model.satisfies_h3 && model.alpha) {
      const double a = *model.alpha;
      const double limit = std::pow(8.0 / (a * a), 0.25);
      report.limit_expected = limit;
      MarginTracker m;
      m.update(kLimitTolerance - std::abs(est - limit), s_max);
      for (std::size_t i = 0; i < grid.size(); ++i)
        m.update(limit * std::sqrt(std::abs(grid[i])) - std::abs(vals[i].f), grid[i]);
      report.items.push_back(
          finish("vi", "|f(s)|/sqrt|s| -> (8/alpha^2)^{1/4} and |f| <= (8/alpha^2)^{1/4}|s|^{1/2}", m));
    } else {
      PropertyCheck c;
      c.item = "vi";
      c.statement = "skipped: model does not satisfy the growth hypothesis";
      c.applicable = false;
      report.items.push_back(c);
    }
  }
  return report;
}

void write_transform_csv(std::ostream& out, const DualTransform& transform) {
  out << "t,upsilon\n";
  const auto& t = transform.knots_t();
  const auto& u = transform.knots_upsilon();
  for (std::size_t i = 0; i < t.size(); ++i) out << fmt17(t[i]) << ',' << fmt17(u[i]) << '\n';
}

std::vector<std::pair<double, double>> read_transform_csv(std::istream& in) {
  std::vector<std::pair<double, double>> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "t,upsilon") throw DomainError("transform CSV: expected header t,upsilon");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("transform CSV: malformed row");
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  return rows;
}

}  // namespace quasivar
