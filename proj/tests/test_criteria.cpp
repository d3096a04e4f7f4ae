#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "cvent/channel.hpp"
#include "cvent/criteria.hpp"
#include "oracle.hpp"

using namespace cvent;

TEST(Duan, Examples) {
  EXPECT_DOUBLE_EQ(duan_value(Eigen::Matrix4d::Identity().eval()), 4.0);
  EXPECT_DOUBLE_EQ(duan_value(JointVariances{0.5, 0.5}), 2.0);
  EXPECT_DOUBLE_EQ(duan_value(JointVariances{1.0, 1.0}), 4.0);
  const auto m = entangle_single(0.5, 2.0, 0.5, 2.0, std::numbers::pi / 2, 0.5);
  EXPECT_NEAR(duan_value(m), 2.0, 1e-14);
}

TEST(Duan, MatrixAndJointFormsAgree) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 100; ++k) {
    const double v1 = u(rng), v2 = u(rng);
    const auto m = apply_loss(entangle_single(v1, 1.0 / v1, v2, 1.0 / v2, 6 * u(rng), u(rng)), u(rng), u(rng));
    EXPECT_NEAR(duan_value(m), duan_value(joint_variances(m, 1.0, 1.0)), 1e-12);
  }
}

TEST(TwoModeSqueezing, Examples) {
  EXPECT_DOUBLE_EQ(tms_db(4.0), 0.0);
  EXPECT_NEAR(tms_db(2.0), 3.0103, 5e-5);
  EXPECT_NEAR(tms_db(1.78), 3.516, 1e-3);
  EXPECT_THROW(tms_db(0.0), InvalidArgument);
  EXPECT_THROW(tms_db(-1.0), InvalidArgument);
}

TEST(Reid, VacuumIsOne) {
  EXPECT_DOUBLE_EQ(reid_epr_product(Eigen::Matrix4d::Identity().eval()), 1.0);
}

TEST(Reid, SymmetricStateMatchesOracles) {
  for (double x : {0.1, 0.4, 0.6768, 0.9}) {
    const double vsq = oracle::v_sq(x, 1e8, 1.13e9), vanti = oracle::v_anti(x, 1e8, 1.13e9);
    const auto m = entangle_single(vsq, vanti, vsq, vanti, std::numbers::pi / 2, 0.5);
    const double e = reid_epr_product(m);
    EXPECT_NEAR(e, oracle::reid_symmetric(vsq, vanti), 1e-12);
    EXPECT_NEAR(e, oracle::conditional_variance(m, kXA, kXB) * oracle::conditional_variance(m, kYA, kYB),
                1e-12);
  }
}

TEST(Reid, DuanBelowTwoImpliesEprForSymmetricStates) {
  for (double x = 0.0; x < 0.99; x += 0.03) {
    for (double eta = 0.0; eta <= 1.0; eta += 0.05) {
      const double vsq = oracle::v_sq(x, 0.0, 1.0), vanti = oracle::v_anti(x, 0.0, 1.0);
      const auto m = apply_loss(entangle_single(vsq, vanti, vsq, vanti, std::numbers::pi / 2, 0.5), eta, eta);
      if (duan_value(m) < 2.0) EXPECT_LT(reid_epr_product(m), 1.0) << x << " " << eta;
    }
  }
}

TEST(Reid, RejectsNonPositiveConditioning) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(kXB, kXB) = 0.0;
  EXPECT_THROW(reid_epr_product(m), InvalidArgument);
}

TEST(Classify, VacuumHasNoBands) {
  const Grid grid = Grid::linear(1e6, 1e9, 50);
  const auto c = make_criteria(grid, std::vector<double>(grid.size(), 4.0));
  const auto s = classify(c);
  EXPECT_TRUE(s.entangled_bands.empty());
  EXPECT_TRUE(s.epr_bands.empty());
  EXPECT_FALSE(s.entangled_band.has_value());
  EXPECT_DOUBLE_EQ(s.min_duan, 4.0);
  for (double t : c.tms_db) EXPECT_DOUBLE_EQ(t, 0.0);
}

TEST(Classify, ConstructedEprBand) {
  // V-shaped spectrum crossing 2 at 100 and 500 MHz, 4 at 0 (absent) and 900 MHz.
  const Grid grid = Grid::linear(25e6, 1000e6, 40);
  std::vector<double> duan;
  for (double f : grid) duan.push_back(std::min(5.0, 1.0 + std::abs(f - 300e6) / 200e6));
  const auto s = classify(make_criteria(grid, duan));
  ASSERT_EQ(s.epr_bands.size(), 1u);
  EXPECT_NEAR(s.epr_band->lower_hz, 100e6, 1e-3);
  EXPECT_NEAR(s.epr_band->upper_hz, 500e6, 1e-3);
  ASSERT_EQ(s.entangled_bands.size(), 1u);
  EXPECT_DOUBLE_EQ(s.entangled_band->lower_hz, 25e6);
  EXPECT_NEAR(s.entangled_band->upper_hz, 900e6, 1e-3);
  EXPECT_NEAR(s.min_duan, 1.0, 1e-12);
  EXPECT_NEAR(s.min_duan_frequency_hz, 300e6, 1e-3);
}

TEST(Classify, WidestOfSeveralBands) {
  const Grid grid({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
  const std::vector<double> duan{3.0, 5.0, 3.0, 3.0, 3.0, 5.0, 3.0, 5.0};
  const auto s = classify(make_criteria(grid, duan));
  ASSERT_EQ(s.entangled_bands.size(), 3u);
  EXPECT_NEAR(s.entangled_band->lower_hz, 2.5, 1e-12);
  EXPECT_NEAR(s.entangled_band->upper_hz, 5.5, 1e-12);
}

TEST(CriteriaSpectrum, FromCovariance) {
  const Grid grid({1e6, 1e8});
  CovarianceSpectrum cov{grid, {}};
  for (double f : grid) {
    const double vsq = oracle::v_sq(0.5, f, 1e9), vanti = oracle::v_anti(0.5, f, 1e9);
    cov.matrices.push_back(entangle_single(vsq, vanti, vsq, vanti, std::numbers::pi / 2, 0.5));
  }
  const auto c = criteria_from_covariance(cov);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_NEAR(c.duan[i], 4.0 * oracle::v_sq(0.5, grid[i], 1e9), 1e-12);
    EXPECT_TRUE(c.entangled(i));
    EXPECT_TRUE(c.epr_by_reid(i));
  }
  EXPECT_THROW(make_criteria(grid, {1.0}), InvalidArgument);
}
