#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "quasivar/errors.hpp"
#include "quasivar/transform.hpp"

using namespace quasivar;

namespace {

// Closed form of Upsilon for theta(s) = 1 + 2 s^2.
double upsilon_star(double t) {
  const double r2 = std::sqrt(2.0);
  return 0.5 * t * std::sqrt(1.0 + 2.0 * t * t) + std::asinh(r2 * t) / (2.0 * r2);
}

// Independent inverse of the closed form by bracketing.
double f_star(double s) {
  auto g = [s](double t) { return upsilon_star(t) - s; };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(g, 0.0, std::max(1.0, s), tol, it);
  return 0.5 * (a + b);
}

}  // namespace

TEST(ThetaModels, RegisteredNamesAndAlpha) {
  const auto models = registered_models();
  ASSERT_EQ(models.size(), 4u);
  EXPECT_FALSE(theta_model("theta_one").satisfies_h3);
  EXPECT_FALSE(theta_model("theta_one").alpha.has_value());
  EXPECT_DOUBLE_EQ(*theta_model("theta_star").alpha, 2.0);
  EXPECT_DOUBLE_EQ(*theta_model("theta_sharp").alpha, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(*theta_model("theta_dagger").alpha, std::sqrt(2.0));
  EXPECT_THROW(theta_model("theta_bogus"), DomainError);
}

TEST(ThetaModels, SampledHypothesesHold) {
  for (const ThetaModel& m : registered_models()) {
    const ModelCheck c = check_theta_model(m);
    EXPECT_TRUE(c.ok()) << m.name;
  }
}

TEST(ThetaModels, DerivativeMatchesFiniteDifference) {
  for (const ThetaModel& m : registered_models()) {
    for (double s : {-3.0, -0.7, 0.0, 0.3, 1.0, 2.5, 10.0}) {
      const double h = 1e-6 * std::max(1.0, std::abs(s));
      const double fd = (m.value(s + h) - m.value(s - h)) / (2.0 * h);
      EXPECT_NEAR(m.derivative(s), fd, 1e-6 * (1.0 + std::abs(fd))) << m.name << " s=" << s;
    }
  }
}

TEST(ThetaModels, DaggerStaysFiniteForLargeArguments) {
  const ThetaModel m = theta_model(ThetaKind::Dagger);
  EXPECT_NEAR(m.value(100.0), 1.0 + 1e4, 1e-9);
  EXPECT_TRUE(std::isfinite(m.derivative(1e3)));
  EXPECT_THROW(theta_eval(m, std::nan("")), DomainError);
  EXPECT_THROW(theta_eval(m, INFINITY), DomainError);
}

TEST(Upsilon, MatchesClosedFormForStar) {
  const ThetaModel m = theta_model(ThetaKind::Star);
  for (double t : {0.0, 0.1, 1.0, 3.0, 50.0, 1e3})
    EXPECT_NEAR(upsilon(m, t, 1e-12), upsilon_star(t), 1e-12 * std::max(1.0, upsilon_star(t)));
}

TEST(DualTransform, IdentityModelGivesIdentity) {
  const DualTransform T = build_transform(theta_model(ThetaKind::One), 10.0, 1e-12);
  for (int i = 0; i <= 1000; ++i) {
    const double s = -10.0 + 0.02 * i;
    EXPECT_NEAR(T.f(s), s, 1e-11);
    EXPECT_NEAR(T.eval(s).f1, 1.0, 1e-14);
  }
}

TEST(DualTransform, StarValueAtUpsilonOfOne) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Star), 10.0, 1e-10);
  EXPECT_NEAR(T.f(upsilon_star(1.0)), 1.0, 1e-9);
  EXPECT_NEAR(T.f(1.271279), 1.0, 1e-5);
}

TEST(DualTransform, StarMatchesIndependentInversionOnWideRange) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Star), 1e6, 1e-8);
  for (double s : {1e-3, 0.5, 2.0, 37.0, 1e3, 5e4, 1e6})
    EXPECT_NEAR(T.f(s), f_star(s), 1e-10 * std::max(1.0, f_star(s))) << "s=" << s;
  EXPECT_NEAR(T.f(1e6) / 1e3, std::pow(2.0, 0.25), 0.01);
}

TEST(DualTransform, RoundTripWithinTenTol) {
  for (const ThetaModel& m : registered_models()) {
    const double tol = 1e-10;
    const DualTransform T = build_transform(m, 10.0, tol);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 10.0);
    for (int i = 0; i < 200; ++i) {
      const double s = U(rng);
      EXPECT_LE(std::abs(upsilon(m, T.f(s), 1e-12) - s), 10.0 * tol) << m.name << " s=" << s;
    }
  }
}

TEST(DualTransform, OddAndDerivativesConsistent) {
  for (const ThetaModel& m : registered_models()) {
    const DualTransform T = build_transform(m, 100.0, 1e-10);
    for (double s : {0.01, 0.4, 1.7, 9.0, 60.0}) {
      const FValue a = T.eval(s);
      const FValue b = T.eval(-s);
      EXPECT_DOUBLE_EQ(a.f, -b.f);
      EXPECT_DOUBLE_EQ(a.f1, b.f1);
      const double h = 1e-5 * s;
      EXPECT_NEAR(a.f1, (T.f(s + h) - T.f(s - h)) / (2.0 * h), 1e-7) << m.name;
      EXPECT_NEAR(a.f2, (T.eval(s + h).f1 - T.eval(s - h).f1) / (2.0 * h), 1e-6) << m.name;
    }
  }
}

TEST(DualTransform, MonotoneOnRandomSamples) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Sharp), 1e4, 1e-10);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1e4, 1e4);
  for (int i = 0; i < 2000; ++i) {
    double a = U(rng), b = U(rng);
    if (a > b) std::swap(a, b);
    EXPECT_LE(T.f(a), T.f(b));
    EXPECT_LE(std::abs(T.f(a)), std::abs(a) + 1e-12);
  }
}

TEST(DualTransform, RejectsBadInputs) {
  const ThetaModel m = theta_model(ThetaKind::Star);
  EXPECT_THROW(build_transform(m, 0.0, 1e-8), DomainError);
  EXPECT_THROW(build_transform(m, 10.0, -1.0), DomainError);
  EXPECT_THROW(build_transform(m, INFINITY, 1e-8), DomainError);
  const DualTransform T = build_transform(m, 10.0, 1e-8);
  EXPECT_THROW(T.eval(10.5), RangeError);
  EXPECT_THROW(T.eval(-11.0), RangeError);
  EXPECT_NO_THROW(T.eval(10.0));
}

TEST(DualTransform, UpsilonAtInvertsF) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Dagger), 50.0, 1e-10);
  for (double s : {0.2, 3.0, 49.0}) EXPECT_NEAR(T.upsilon_at(T.f(s)), s, 1e-9);
}

TEST(DualTransform, KnotsAreIncreasingAndCoverRange) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Sharp), 1e3, 1e-9);
  const auto& t = T.knots_t();
  const auto& u = T.knots_upsilon();
  for (std::size_t i = 1; i < t.size(); ++i) {
    ASSERT_LT(t[i - 1], t[i]);
    ASSERT_LT(u[i - 1], u[i]);
  }
  EXPECT_GE(u.back(), 1e3);
  EXPECT_LE(T.t_max(), 1e3);  // Upsilon(t) >= t
}

TEST(DualTransform, CsvRoundTripIsExact) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Star), 100.0, 1e-9);
  std::stringstream ss;
  write_transform_csv(ss, T);
  const auto rows = read_transform_csv(ss);
  ASSERT_EQ(rows.size(), T.knots_t().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].first, T.knots_t()[i]);
    EXPECT_EQ(rows[i].second, T.knots_upsilon()[i]);
  }
}

TEST(VerifyTransform, AllModelsPassAndLimitsMatch) {
  for (const ThetaModel& m : registered_models()) {
    const DualTransform T = build_transform(m, 1e6, 1e-8);
    const TransformReport r = verify_transform(T, 10000);
    ASSERT_EQ(r.items.size(), 6u);
    EXPECT_TRUE(r.all_passed()) << m.name;
    for (const PropertyCheck& c : r.items)
      if (c.applicable) EXPECT_GE(c.margin, -kPropertySlack) << m.name << " item " << c.item;
    if (m.satisfies_h3) {
      ASSERT_TRUE(r.limit_estimate && r.limit_expected);
      EXPECT_NEAR(*r.limit_estimate, *r.limit_expected, kLimitTolerance) << m.name;
    } else {
      EXPECT_FALSE(r.items[5].applicable);
    }
  }
}

TEST(VerifyTransform, ExpectedLimits) {
  const TransformReport star =
      verify_transform(build_transform(theta_model(ThetaKind::Star), 1e6, 1e-8), 200);
  EXPECT_NEAR(*star.limit_expected, std::pow(2.0, 0.25), 1e-15);
  const TransformReport sharp =
      verify_transform(build_transform(theta_model(ThetaKind::Sharp), 1e6, 1e-8), 200);
  EXPECT_NEAR(*sharp.limit_expected, std::sqrt(2.0), 1e-15);
}
