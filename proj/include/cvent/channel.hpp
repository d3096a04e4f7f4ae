#pragma once

// Entanglement generation on a beam splitter and the lossy, imperfect
// balanced-homodyne detection chain.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "cvent/curve.hpp"
#include "cvent/error.hpp"
#include "cvent/opa.hpp"
#include "cvent/quadrature.hpp"

namespace cvent {

template <typename Scalar = double>
struct EntanglerConfig {
  OpaSpectrumModel<Scalar> source_a;
  OpaSpectrumModel<Scalar> source_b;
  Scalar relative_phase = std::numbers::pi_v<Scalar> / Scalar(2);
  Scalar beam_splitter_reflectivity = Scalar(0.5);

  void validate() const {
    source_a.validate();
    source_b.validate();
    detail::require(beam_splitter_reflectivity > Scalar(0) && beam_splitter_reflectivity < Scalar(1),
                    "beam splitter reflectivity must be in (0, 1)");
  }
};

/// Output covariance of a beam splitter fed by a source squeezed in X and a
/// second source rotated by `phase`:
///   A = t a1 + r a2,  B = r a1 - t a2,  t = sqrt(1-R), r = sqrt(R).
template <typename Scalar>
Covariance4<Scalar> entangle_single(Scalar v_sq_1, Scalar v_anti_1, Scalar v_sq_2, Scalar v_anti_2,
                                    Scalar phase, Scalar reflectivity) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  Eigen::Matrix<Scalar, 2, 2> rot;
  rot << cos(phase), -sin(phase), sin(phase), cos(phase);
  const Eigen::Matrix<Scalar, 2, 2> second =
      rot * Eigen::Matrix<Scalar, 2, 1>(v_sq_2, v_anti_2).asDiagonal() * rot.transpose();

  Covariance4<Scalar> in = Covariance4<Scalar>::Zero();
  in(0, 0) = v_sq_1;
  in(1, 1) = v_anti_1;
  in.template block<2, 2>(2, 2) = second;

  const Scalar t = sqrt(Scalar(1) - reflectivity);
  const Scalar r = sqrt(reflectivity);
  Covariance4<Scalar> s;
  // rows: X_A, Y_A, X_B, Y_B; columns: X_1, Y_1, X_2, Y_2
  s << t, 0, r, 0,
       0, t, 0, r,
       r, 0, -t, 0,
       0, r, 0, -t;
  Covariance4<Scalar> out = s * in * s.transpose();
  return (out + out.transpose()) / Scalar(2);
}

template <typename Scalar>
Covariance4<Scalar> entangle_at(const EntanglerConfig<Scalar>& cfg, Scalar frequency) {
  return entangle_single(squeezed_variance(cfg.source_a, frequency), anti_squeezed_variance(cfg.source_a, frequency),
                         squeezed_variance(cfg.source_b, frequency), anti_squeezed_variance(cfg.source_b, frequency),
                         cfg.relative_phase, cfg.beam_splitter_reflectivity);
}

template <typename Scalar>
TwoModeCovarianceSpectrum<Scalar> entangle(const EntanglerConfig<Scalar>& cfg, const FrequencyGrid<Scalar>& grid) {
  cfg.validate();
  TwoModeCovarianceSpectrum<Scalar> out{grid, {}};
  out.matrices.reserve(grid.size());
  for (Scalar f : grid) out.matrices.push_back(entangle_at(cfg, f));
  return out;
}

/// Beam-splitter loss per mode: cov -> S cov S + (I - S^2), S = diag(sqrt(eta)).
template <typename Derived>
Covariance4<typename Derived::Scalar> apply_loss(const Eigen::MatrixBase<Derived>& cov,
                                                 typename Derived::Scalar eta_a,
                                                 typename Derived::Scalar eta_b) {
  using Scalar = typename Derived::Scalar;
  using std::sqrt;
  detail::require(eta_a >= Scalar(0) && eta_a <= Scalar(1) && eta_b >= Scalar(0) && eta_b <= Scalar(1),
                  "efficiency must be in [0, 1]");
  const Eigen::Matrix<Scalar, 4, 1> s(sqrt(eta_a), sqrt(eta_a), sqrt(eta_b), sqrt(eta_b));
  Covariance4<Scalar> out = s.asDiagonal() * cov * s.asDiagonal();
  out.diagonal() += (Eigen::Matrix<Scalar, 4, 1>::Ones() - s.cwiseProduct(s));
  return out;
}

template <typename Scalar>
TwoModeCovarianceSpectrum<Scalar> apply_uniform_loss(const TwoModeCovarianceSpectrum<Scalar>& cov, Scalar eta_a,
                                                     Scalar eta_b) {
  TwoModeCovarianceSpectrum<Scalar> out{cov.grid, {}};
  out.matrices.reserve(cov.size());
  for (const auto& m : cov.matrices) out.matrices.push_back(apply_loss(m, eta_a, eta_b));
  return out;
}

template <typename Scalar>
TwoModeCovarianceSpectrum<Scalar> apply_uniform_loss(const TwoModeCovarianceSpectrum<Scalar>& cov, Scalar eta) {
  return apply_uniform_loss(cov, eta, eta);
}

template <typename Scalar>
Scalar efficiency_budget(Scalar overlap, Scalar path, Scalar quantum) {
  for (Scalar v : {overlap, path, quantum}) {
    detail::require(v >= Scalar(0) && v <= Scalar(1), "efficiency components must be in [0, 1]");
  }
  return overlap * path * quantum;
}

/// Everything between the beam splitter outputs and the spectrum analyzer.
struct DetectionChain {
  double propagation_efficiency = 1.0;
  double overlap_efficiency = 1.0;  ///< mode-overlap power efficiency (visibility squared)
  double quantum_efficiency = 1.0;
  std::optional<double> total_efficiency;  ///< overrides the product above when set

  Curve gain_a_db = Curve::constant(0.0);  ///< amplitude gain, 20 log10(g)
  Curve gain_b_db = Curve::constant(0.0);
  double gain_ratio = 1.0;  ///< extra amplitude gain on detector A

  std::optional<Curve> clearance_a;  ///< empty: no dark noise
  std::optional<Curve> clearance_b;
  double clearance_offset_db = 0.0;
  bool dark_noise_subtracted = false;

  double efficiency() const {
    if (total_efficiency) return *total_efficiency;
    return efficiency_budget(overlap_efficiency, propagation_efficiency, quantum_efficiency);
  }

  void validate() const;
};

struct DetectorGains {
  double a = 1.0;
  double b = 1.0;
};

inline double amplitude_from_db(double db) { return std::pow(10.0, db / 20.0); }

/// Sum/difference variances normalized to the combined vacuum level (vacuum = 1).
struct JointVariances {
  double xsum;
  double ydiff;
};

template <typename Derived>
JointVariances joint_variances(const Eigen::MatrixBase<Derived>& cov, double g_a, double g_b) {
  detail::require(g_a > 0.0 && g_b > 0.0, "detector gains must be positive");
  const double ga2 = g_a * g_a;
  const double gb2 = g_b * g_b;
  const double norm = ga2 + gb2;
  const double xsum = (ga2 * cov(kXA, kXA) + gb2 * cov(kXB, kXB) + 2.0 * g_a * g_b * cov(kXA, kXB)) / norm;
  const double ydiff = (ga2 * cov(kYA, kYA) + gb2 * cov(kYB, kYB) - 2.0 * g_a * g_b * cov(kYA, kYB)) / norm;
  return {xsum, ydiff};
}

struct JointQuadratureSpectra {
  Grid grid;
  std::vector<double> var_xsum;
  std::vector<double> var_ydiff;
};

JointQuadratureSpectra joint_variances_with_gains(const CovarianceSpectrum& cov, const Curve& gain_a_db,
                                                  const Curve& gain_b_db);

/// Dark-noise variance of each detector in units of its own vacuum level.
struct DarkNoise {
  double a = 0.0;
  double b = 0.0;
};

DarkNoise dark_noise_at(const DetectionChain& chain, double frequency_hz);

/// Gain-weighted combined dark variance.
inline double combined_dark(const DarkNoise& d, double g_a, double g_b) {
  return (g_a * g_a * d.a + g_b * g_b * d.b) / (g_a * g_a + g_b * g_b);
}

/// Both the signal and the vacuum reference trace contain dark noise unless
/// it is subtracted: V -> (V + d) / (1 + d).
inline double with_dark_noise(double v, double d, bool subtracted) {
  return subtracted ? v : (v + d) / (1.0 + d);
}

JointQuadratureSpectra apply_dark_noise(const JointQuadratureSpectra& spectra, const DetectionChain& chain);

/// Covariance as seen by detectors that each normalize to their own
/// (vacuum + dark) level. Equivalent to an extra loss 1/(1+d) per mode.
template <typename Derived>
Covariance4<typename Derived::Scalar> apply_detector_dark_noise(const Eigen::MatrixBase<Derived>& cov,
                                                                const DarkNoise& d) {
  using Scalar = typename Derived::Scalar;
  return apply_loss(cov, Scalar(1) / (Scalar(1) + Scalar(d.a)), Scalar(1) / (Scalar(1) + Scalar(d.b)));
}

}  // namespace cvent
