#pragma once

// Entanglement measures: Duan inseparability, two-mode squeezing and the
// Reid EPR conditional-variance product.

#include <cmath>
#include <optional>
#include <vector>

#include "cvent/channel.hpp"
#include "cvent/error.hpp"
#include "cvent/quadrature.hpp"

namespace cvent {

inline constexpr double kDuanThreshold = 4.0;
inline constexpr double kEprDuanThreshold = 2.0;

/// Var(X_A + X_B) + Var(Y_A - Y_B); the vacuum gives 2 per term.
template <typename Derived>
typename Derived::Scalar duan_value(const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  return cov(kXA, kXA) + cov(kXB, kXB) + Scalar(2) * cov(kXA, kXB) + cov(kYA, kYA) + cov(kYB, kYB) -
         Scalar(2) * cov(kYA, kYB);
}

/// From combined-vacuum-normalized joint variances (vacuum = 1 per term).
inline double duan_value(const JointVariances& j) { return 2.0 * (j.xsum + j.ydiff); }

inline std::vector<double> duan_value(const JointQuadratureSpectra& s) {
  std::vector<double> out(s.grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * (s.var_xsum[i] + s.var_ydiff[i]);
  return out;
}

/// -10 log10(D / 4).
template <typename Scalar>
Scalar tms_db(Scalar duan) {
  detail::require(duan > Scalar(0), "Duan value must be positive");
  using std::log10;
  return Scalar(-10) * log10(duan / Scalar(kDuanThreshold));
}

/// Product of the conditional variances of A given optimal linear inference
/// from B. EPR paradox demonstrated when below 1.
template <typename Derived>
typename Derived::Scalar reid_epr_product(const Eigen::MatrixBase<Derived>& cov) {
  using Scalar = typename Derived::Scalar;
  const Scalar vxb = cov(kXB, kXB);
  const Scalar vyb = cov(kYB, kYB);
  detail::require(vxb > Scalar(0) && vyb > Scalar(0), "conditioning variance of mode B must be positive");
  const Scalar cx = cov(kXA, kXB);
  const Scalar cy = cov(kYA, kYB);
  return (cov(kXA, kXA) - cx * cx / vxb) * (cov(kYA, kYA) - cy * cy / vyb);
}

struct CriteriaSpectrum {
  Grid grid;
  std::vector<double> duan;
  std::vector<double> tms_db;
  std::vector<double> reid_product;

  bool entangled(std::size_t i) const { return duan[i] < kDuanThreshold; }
  bool epr_by_duan_symmetric(std::size_t i) const { return duan[i] < kEprDuanThreshold; }
  bool epr_by_reid(std::size_t i) const { return reid_product[i] < 1.0; }
};

/// Builds a criteria spectrum from Duan values and (optionally) Reid products;
/// missing Reid values are stored as NaN.
CriteriaSpectrum make_criteria(const Grid& grid, std::vector<double> duan, std::vector<double> reid = {});

CriteriaSpectrum criteria_from_covariance(const CovarianceSpectrum& cov);

struct FrequencyBand {
  double lower_hz;
  double upper_hz;
  double width() const { return upper_hz - lower_hz; }
};

/// Contiguous ranges where values < threshold, with edges located by linear
/// interpolation between grid points.
std::vector<FrequencyBand> bands_below(const Grid& grid, const std::vector<double>& values, double threshold);

struct CriteriaSummary {
  std::vector<FrequencyBand> entangled_bands;
  std::vector<FrequencyBand> epr_bands;
  std::optional<FrequencyBand> entangled_band;  ///< widest
  std::optional<FrequencyBand> epr_band;        ///< widest
  double min_duan = 0.0;
  double min_duan_frequency_hz = 0.0;
};

CriteriaSummary classify(const CriteriaSpectrum& criteria);

}  // namespace cvent
