#include <gtest/gtest.h>

#include "cvent/cavity.hpp"

using namespace cvent;

namespace {

CavityGeometry<double> signal_cavity(double loss = 0.0) { return {2.6e-3, 1.816, 0.9998, 0.64, loss}; }
CavityGeometry<double> pump_cavity() { return {2.6e-3, 1.816, 0.98, 0.9998, 0.0}; }

}  // namespace

TEST(FreeSpectralRange, Examples) {
  EXPECT_NEAR(free_spectral_range(signal_cavity()), 31.75e9, 0.05e9);
  EXPECT_NEAR(free_spectral_range(CavityGeometry<double>{0.149896229, 1.0, 0.5, 0.5, 0.0}), 1.0e9, 1e-3);
  EXPECT_NEAR(free_spectral_range(CavityGeometry<double>{2.6e-3, 1.0, 0.5, 0.5, 0.0}), 57.652e9, 0.001e9);
}

TEST(Finesse, Examples) {
  EXPECT_NEAR(finesse(signal_cavity()), 14.0, 0.2);
  EXPECT_NEAR(finesse(pump_cavity()), 308.0, 2.0);
  EXPECT_DOUBLE_EQ(finesse(CavityGeometry<double>{1e-3, 1.5, 0.0, 0.0, 0.3}), 0.0);
}

TEST(Finesse, RejectsLosslessCavity) {
  EXPECT_THROW(finesse(CavityGeometry<double>{1e-3, 1.5, 1.0, 1.0, 0.0}), InvalidArgument);
}

TEST(Geometry, RejectsOutOfRangeFields) {
  EXPECT_THROW(finesse(CavityGeometry<double>{0.0, 1.5, 0.5, 0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(finesse(CavityGeometry<double>{1e-3, 0.9, 0.5, 0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(finesse(CavityGeometry<double>{1e-3, 1.5, 1.2, 0.5, 0.0}), InvalidArgument);
  EXPECT_THROW(finesse(CavityGeometry<double>{1e-3, 1.5, 0.5, 0.5, 1.0}), InvalidArgument);
}

TEST(Linewidth, Examples) {
  EXPECT_NEAR(linewidth_fwhm(signal_cavity()), 2.26e9, 0.05e9);
  // FSR/F with the pump mirror set and the signal index
  EXPECT_NEAR(linewidth_fwhm(pump_cavity()), 103e6, 1e6);
  EXPECT_THROW(linewidth_fwhm(CavityGeometry<double>{1e-3, 1.5, 0.0, 0.0, 0.0}), InvalidArgument);
}

TEST(Linewidth, TimesFinesseIsFsr) {
  for (double r2 : {0.3, 0.64, 0.9, 0.99}) {
    const CavityGeometry<double> g{2.6e-3, 1.816, 0.9998, r2, 1e-4};
    EXPECT_NEAR(linewidth_fwhm(g) * finesse(g) / free_spectral_range(g), 1.0, 1e-12);
  }
}

TEST(Buildup, Examples) {
  const double b = power_buildup(pump_cavity());
  EXPECT_NEAR(b, 194.0, 2.0);
  EXPECT_NEAR(0.300 * b, 58.2, 0.5);
  EXPECT_NEAR(0.655 * b, 127.0, 1.0);
  EXPECT_THROW(power_buildup(CavityGeometry<double>{1e-3, 1.5, 1.0, 0.5, 0.0}), InvalidArgument);
}

TEST(EscapeEfficiency, Examples) {
  const double loss = absorption_round_trip_loss(2.6e-3, 84e-6 * 100.0);
  EXPECT_NEAR(loss, 4.4e-5, 0.1e-5);
  EXPECT_NEAR(escape_efficiency(signal_cavity(loss)), 0.999, 5e-4);
  // loss equal to T_out, no other transmission
  EXPECT_DOUBLE_EQ(escape_efficiency(CavityGeometry<double>{1e-3, 1.5, 1.0, 0.9, 0.1}), 0.5);
  EXPECT_DOUBLE_EQ(escape_efficiency(CavityGeometry<double>{1e-3, 1.5, 1.0, 0.9, 0.0}), 1.0);
}

TEST(Monotonicity, FinesseInReflectivityBuildupInLoss) {
  double prev = 0.0;
  for (double r = 0.5; r < 0.999; r += 0.01) {
    const double f = finesse(CavityGeometry<double>{2.6e-3, 1.816, r, 0.9, 0.0});
    EXPECT_GT(f, prev);
    prev = f;
  }
  prev = 0.0;
  for (double r = 0.5; r < 0.999; r += 0.01) {
    const double f = finesse(CavityGeometry<double>{2.6e-3, 1.816, 0.9, r, 0.0});
    EXPECT_GT(f, prev);
    prev = f;
  }
  prev = INFINITY;
  for (double loss = 0.0; loss < 0.05; loss += 0.001) {
    const double b = power_buildup(CavityGeometry<double>{2.6e-3, 1.816, 0.98, 0.9998, loss});
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(FiguresOfMerit, Consistent) {
  const auto f = figures_of_merit(signal_cavity());
  EXPECT_DOUBLE_EQ(f.hwhm, f.fwhm / 2.0);
  EXPECT_NEAR(f.fwhm, f.fsr / f.finesse, 1e-12 * f.fwhm);
}

TEST(Templated, WorksWithLongDouble) {
  const CavityGeometry<long double> g{2.6e-3L, 1.816L, 0.98L, 0.9998L, 0.0L};
  EXPECT_NEAR(double(power_buildup(g)), power_buildup(pump_cavity()), 1e-9);
}
