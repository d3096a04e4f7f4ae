#include <random>

#include <gtest/gtest.h>

#include "cvent/channel.hpp"
#include "cvent/criteria.hpp"
#include "cvent/quadrature.hpp"
#include "oracle.hpp"

using namespace cvent;

TEST(FrequencyGrid, RejectsInvalidPoints) {
  EXPECT_THROW(Grid({1.0}), InvalidArgument);
  EXPECT_THROW(Grid({1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(Grid({2.0, 1.0}), InvalidArgument);
  EXPECT_THROW(Grid({0.0, 1.0}), InvalidArgument);
  EXPECT_THROW(Grid({1.0, INFINITY}), InvalidArgument);
  EXPECT_NO_THROW(Grid({1.0, 2.0}));
}

TEST(FrequencyGrid, LinearHitsEndpointsExactly) {
  const auto g = Grid::linear(2e6, 1480e6, 740);
  EXPECT_EQ(g.size(), 740u);
  EXPECT_EQ(g.front(), 2e6);
  EXPECT_EQ(g.back(), 1480e6);
  EXPECT_NEAR(g[1] - g[0], 2e6, 1e-6);
}

TEST(QuadratureVariance, RejectsNonPositive) {
  EXPECT_THROW(QuadratureVariance<double>(0.0), InvalidArgument);
  EXPECT_THROW(QuadratureVariance<double>(-1.0), InvalidArgument);
  EXPECT_DOUBLE_EQ(QuadratureVariance<double>(0.5).value(), 0.5);
}

TEST(Vacuum, IdentityAtEveryFrequency) {
  const auto vac = vacuum_covariance(Grid({1e6, 2e6, 3e6}));
  ASSERT_EQ(vac.size(), 3u);
  for (const auto& m : vac.matrices) {
    EXPECT_TRUE(m.isIdentity(0.0));
    EXPECT_DOUBLE_EQ(duan_value(m), 4.0);
    const auto nu = symplectic_eigenvalues(m);
    EXPECT_NEAR(nu[0], 1.0, 1e-14);
    EXPECT_NEAR(nu[1], 1.0, 1e-14);
  }
  EXPECT_TRUE(validate_covariance(vac).ok());
}

TEST(Decibel, Examples) {
  EXPECT_DOUBLE_EQ(db_from_ratio(1.0), 0.0);
  EXPECT_NEAR(db_from_ratio(0.5), -3.0103, 5e-5);
  EXPECT_NEAR(ratio_from_db(-13.0), 0.0501, 5e-5);
  EXPECT_THROW(db_from_ratio(0.0), InvalidArgument);
  EXPECT_THROW(db_from_ratio(-1.0), InvalidArgument);
}

TEST(Decibel, RoundTripOverRandomRatios) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> exponent(-6.0, 6.0);
  for (int i = 0; i < 1000; ++i) {
    const double r = std::pow(10.0, exponent(rng));
    EXPECT_NEAR(ratio_from_db(db_from_ratio(r)) / r, 1.0, 1e-12);
  }
}

TEST(Symplectic, MatchesInvariantFormula) {
  const auto cov = entangle_single(0.3, 5.0, 0.4, 3.0, 1.1, 0.4);
  const auto nu = symplectic_eigenvalues(cov);
  const auto [n1, n2] = oracle::symplectic_from_invariants(cov);
  EXPECT_NEAR(nu[0], n1, 1e-10);
  EXPECT_NEAR(nu[1], n2, 1e-10);
}

TEST(Validation, FlagsUncertaintyViolation) {
  // single-mode block with symplectic eigenvalue 0.5
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 0.5;
  m(1, 1) = 0.5;
  ValidationReport r;
  validate_matrix(m, 0, 1e6, r);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].kind, CovarianceViolation::Kind::kUncertaintyBound);
  EXPECT_NEAR(r.violations[0].value, 0.5, 1e-12);
}

TEST(Validation, FlagsAsymmetryAndIndefiniteness) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity() * 2.0;
  m(0, 1) = 0.1;
  ValidationReport r;
  validate_matrix(m, 3, 5e6, r);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.violations[0].kind, CovarianceViolation::Kind::kNotSymmetric);
  EXPECT_EQ(r.violations[0].index, 3u);

  Eigen::Matrix4d neg = Eigen::Matrix4d::Identity();
  neg(2, 2) = -1.0;
  ValidationReport r2;
  validate_matrix(neg, 0, 1.0, r2);
  ASSERT_FALSE(r2.ok());
  EXPECT_EQ(r2.violations[0].kind, CovarianceViolation::Kind::kNotPositiveDefinite);

  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(1, 1) = NAN;
  ValidationReport r3;
  validate_matrix(bad, 0, 1.0, r3);
  ASSERT_FALSE(r3.ok());
  EXPECT_EQ(r3.violations[0].kind, CovarianceViolation::Kind::kNonFinite);
}

TEST(Validation, ReportsEveryBadFrequencyWithoutThrowing) {
  CovarianceSpectrum s = vacuum_covariance(Grid({1.0, 2.0, 3.0}));
  s.matrices[0](0, 0) = s.matrices[0](1, 1) = 0.5;
  s.matrices[2](0, 0) = s.matrices[2](1, 1) = 0.5;
  const auto r = validate_covariance(s);
  ASSERT_EQ(r.violations.size(), 2u);
  EXPECT_EQ(r.violations[0].index, 0u);
  EXPECT_EQ(r.violations[1].index, 2u);
  EXPECT_DOUBLE_EQ(r.violations[1].frequency_hz, 3.0);
}

TEST(PartialTranspose, IsAnInvolution) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::Matrix4d a;
    for (int i = 0; i < 16; ++i) a.data()[i] = u(rng);
    const Eigen::Matrix4d m = a * a.transpose() + Eigen::Matrix4d::Identity();
    EXPECT_TRUE(partial_transpose(partial_transpose(m)).isApprox(m, 0.0));
  }
}

TEST(PartialTranspose, NegatesOnlyYbCrossTerms) {
  const auto cov = entangle_single(0.2, 6.0, 0.2, 6.0, std::numbers::pi / 2, 0.5);
  const auto pt = partial_transpose(cov);
  EXPECT_DOUBLE_EQ(pt(kYA, kYB), -cov(kYA, kYB));
  EXPECT_DOUBLE_EQ(pt(kXA, kXB), cov(kXA, kXB));
  EXPECT_DOUBLE_EQ(pt(kYB, kYB), cov(kYB, kYB));
  // The entangled state's transpose violates the uncertainty bound.
  EXPECT_LT(symplectic_eigenvalues(pt)[0], 1.0);
}
