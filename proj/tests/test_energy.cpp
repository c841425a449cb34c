#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

#include "quasivar/energy.hpp"
#include "quasivar/errors.hpp"

using namespace quasivar;

namespace {

const double kPi = std::acos(-1.0);

double upsilon_star(double t) {
  const double r2 = std::sqrt(2.0);
  return 0.5 * t * std::sqrt(1.0 + 2.0 * t * t) + std::asinh(r2 * t) / (2.0 * r2);
}

double f_star(double s) {
  if (s == 0.0) return 0.0;
  const double a = std::abs(s);
  auto g = [a](double t) { return upsilon_star(t) - a; };
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t it = 200;
  const auto [lo, hi] = boost::math::tools::toms748_solve(g, 0.0, std::max(1.0, a), tol, it);
  return std::copysign(0.5 * (lo + hi), s);
}

Field random_field(int K, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> N;
  Field u = Field::zero(K);
  for (int j = 0; j < K; ++j) u.coeffs[j] = scale * N(rng) / (1.0 + j);
  return u;
}

ProblemParams params(double lambda, double mu, double q, double p, ThetaKind kind) {
  ProblemParams P;
  P.lambda = lambda;
  P.mu = mu;
  P.q = q;
  P.p = p;
  P.model = theta_model(kind);
  return P;
}

class EnergyTest : public ::testing::Test {
 protected:
  Space S = build_space(1.0, 16);
  DualTransform Tstar = build_transform(theta_model(ThetaKind::Star), 1e4, 1e-12);
  DualTransform Tone = build_transform(theta_model(ThetaKind::One), 1e4, 1e-12);
};

}  // namespace

TEST_F(EnergyTest, ZeroFieldHasZeroEnergyAndGradient) {
  const ProblemParams P = params(2.0, 3.0, 1.5, 6.0, ThetaKind::Star);
  const Field z = Field::zero(16);
  EXPECT_EQ(energy(P, S, Tstar, z).total, 0.0);
  EXPECT_EQ(gradient(P, S, Tstar, z).norm(), 0.0);
}

TEST_F(EnergyTest, FirstModeClosedFormForIdentityModel) {
  const ProblemParams P = params(3.0, 0.0, 2.0, 3.0, ThetaKind::One);
  for (double c : {0.5, 1.0, 4.0}) {
    const Field v = Field::mode(16, 1, c);
    EXPECT_NEAR(energy(P, S, Tone, v).total, 0.5 * c * c * (1.0 - 3.0 / (kPi * kPi)), 1e-12);
    const Field g = gradient(P, S, Tone, v);
    EXPECT_NEAR(g.coeffs[0], c * (1.0 - 3.0 / (kPi * kPi)), 1e-12);
    EXPECT_NEAR(g.coeffs.tail(15).norm(), 0.0, 1e-12);
  }
}

TEST_F(EnergyTest, FirstEigenvalueMakesFirstModeDegenerate) {
  const ProblemParams P = params(kPi * kPi, 0.0, 2.0, 3.0, ThetaKind::One);
  const Field v = Field::mode(16, 1, 2.5);
  EXPECT_NEAR(energy(P, S, Tone, v).total, 0.0, 1e-12);
  EXPECT_NEAR(gradient(P, S, Tone, v).norm(), 0.0, 1e-12);
}

TEST_F(EnergyTest, MatchesAdaptiveQuadratureOracle) {
  const ProblemParams P = params(1.3, 0.7, 1.5, 5.0, ThetaKind::Star);
  std::mt19937_64 rng(41);
  for (int n = 0; n < 5; ++n) {
    const Field v = random_field(16, rng, 4.0);
    auto integrand = [&](double x) {
      const double u = std::abs(f_star(S.evaluate(v, x)));
      return P.lambda / P.q * std::pow(u, P.q) + P.mu / P.p * std::pow(u, P.p);
    };
    double err = 0.0;
    const double I =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 20, 1e-13, &err);
    const double oracle = 0.5 * v.norm() * v.norm() - I;
    EXPECT_NEAR(energy(P, S, Tstar, v).total, oracle, 1e-8 * (1.0 + std::abs(oracle)));
  }
}

TEST_F(EnergyTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (ThetaKind kind : {ThetaKind::Star, ThetaKind::Sharp, ThetaKind::Dagger}) {
    const DualTransform T = build_transform(theta_model(kind), 1e4, 1e-12);
    const ProblemParams P = params(1.0, 2.0, 1.5, 6.0, kind);
    for (int n = 0; n < 5; ++n) {
      const Field v = random_field(16, rng, 2.0);
      EXPECT_LE(fd_gradient_check(P, S, T, v, 1e-5), 1e-6);
    }
  }
  const ProblemParams P = params(1.0, 2.0, 2.5, 4.0, ThetaKind::One);
  for (int n = 0; n < 5; ++n) {
    const Field v = random_field(16, rng, 1.0);
    EXPECT_LE(fd_gradient_check(P, S, Tone, v, 1e-5), 1e-8);
  }
}

TEST_F(EnergyTest, EnergyAndGradientAgreeWithSeparateCalls) {
  const ProblemParams P = params(-0.5, 1.5, 3.0, 5.0, ThetaKind::Star);
  std::mt19937_64 rng(9);
  const Field v = random_field(16, rng, 3.0);
  Field g = Field::zero(16);
  const double e = energy_and_gradient(P, S, Tstar, v, g);
  EXPECT_NEAR(e, energy(P, S, Tstar, v).total, 1e-12 * (1.0 + std::abs(e)));
  EXPECT_NEAR((g.coeffs - gradient(P, S, Tstar, v).coeffs).norm(), 0.0, 1e-12 * (1.0 + g.norm()));
}

TEST_F(EnergyTest, ResidualEqualsGradientNormForIdentityModel) {
  const ProblemParams P = params(1.0, 1.0, 1.5, 6.0, ThetaKind::One);
  std::mt19937_64 rng(13);
  for (int n = 0; n < 5; ++n) {
    const Field v = random_field(16, rng, 1.5);
    const double g = gradient(P, S, Tone, v).norm();
    EXPECT_NEAR(quasilinear_residual(P, S, Tone, v), g, 1e-10 * (1.0 + g));
  }
}

TEST_F(EnergyTest, EvenInV) {
  const ProblemParams P = params(1.0, 1.0, 1.5, 6.0, ThetaKind::Star);
  std::mt19937_64 rng(15);
  const Field v = random_field(16, rng, 3.0);
  const Field w{-v.coeffs};
  EXPECT_DOUBLE_EQ(energy(P, S, Tstar, v).total, energy(P, S, Tstar, w).total);
  EXPECT_NEAR((gradient(P, S, Tstar, v).coeffs + gradient(P, S, Tstar, w).coeffs).norm(), 0.0, 1e-13);
}

TEST_F(EnergyTest, NonincreasingInLambda) {
  std::mt19937_64 rng(19);
  const Field v = random_field(16, rng, 2.0);
  double prev = INFINITY;
  for (double lambda : {-2.0, -1.0, 0.0, 0.5, 3.0}) {
    const double e = energy(params(lambda, 1.0, 1.5, 6.0, ThetaKind::Star), S, Tstar, v).total;
    EXPECT_LE(e, prev);
    prev = e;
  }
}

TEST_F(EnergyTest, UnboundedBelowAlongRaysWhenMuPositive) {
  const ProblemParams P = params(1.0, 1.0, 1.5, 6.0, ThetaKind::Star);
  const Field u = Field::mode(16, 1);
  double prev = INFINITY;
  for (double rho : {1e2, 1e3, 1e4}) {
    const double e = energy(P, S, Tstar, Field{rho * u.coeffs}).total;
    EXPECT_LT(e, prev);
    prev = e;
  }
  EXPECT_LT(prev, -1e8);
}

TEST_F(EnergyTest, BreakdownSumsAndSerializes) {
  const ProblemParams P = params(2.0, 1.0, 1.5, 6.0, ThetaKind::Star);
  const EnergyBreakdown e = energy(P, S, Tstar, Field::mode(16, 2, 3.0));
  EXPECT_NEAR(e.quadratic, 4.5, 1e-14);
  EXPECT_NEAR(e.total, e.quadratic - e.concave - e.convex, 1e-13);
  EXPECT_GE(e.concave, 0.0);
  EXPECT_GE(e.convex, 0.0);
  const nlohmann::json j = to_json(e);
  for (const char* key : {"quadratic", "concave", "convex", "total"}) EXPECT_TRUE(j.contains(key)) << key;
}

TEST_F(EnergyTest, OutsideTransformRangeThrows) {
  const DualTransform T = build_transform(theta_model(ThetaKind::Star), 10.0, 1e-10);
  const ProblemParams P = params(1.0, 1.0, 1.5, 6.0, ThetaKind::Star);
  EXPECT_THROW(energy(P, S, T, Field::mode(16, 1, 1e3)), RangeError);
}

TEST(ProblemParams, Validation) {
  ProblemParams P = params(1.0, 1.0, 1.5, 6.0, ThetaKind::Star);
  EXPECT_NO_THROW(P.validate());
  P.q = 1.0;
  EXPECT_THROW(P.validate(), DomainError);
  P.q = 4.0;
  EXPECT_THROW(P.validate(), DomainError);
  P.q = 3.0;
  P.p = 3.0;
  EXPECT_THROW(P.validate(), DomainError);
  P.p = 2.0;
  P.q = 1.5;
  EXPECT_THROW(P.validate(), DomainError);
  P.p = 6.0;
  P.nominal_dim = 3;
  EXPECT_NO_THROW(P.validate());
  P.p = 12.0;
  EXPECT_THROW(P.validate(), DomainError);
  P.p = 6.0;
  P.nominal_dim = 2;
  EXPECT_THROW(P.validate(), DomainError);
}
