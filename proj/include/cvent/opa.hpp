#pragma once

// Below-threshold degenerate optical parametric amplifier: squeezing spectra
// and the parametric oscillation threshold with Boyd-Kleinman focusing.

#include <cmath>
#include <complex>
#include <numbers>

#include "cvent/cavity.hpp"
#include "cvent/error.hpp"
#include "cvent/integrate.hpp"
#include "cvent/quadrature.hpp"

namespace cvent {

template <typename Scalar = double>
struct OpaSpectrumModel {
  Scalar gamma_hwhm;                    ///< signal cavity half linewidth, Hz
  Scalar pump_ratio_x = Scalar(0);      ///< sqrt(P / P_thr), in [0, 1)
  Scalar escape_efficiency = Scalar(1);

  void validate() const {
    detail::require(gamma_hwhm > Scalar(0), "OPA half linewidth must be positive");
    detail::require(pump_ratio_x >= Scalar(0), "pump ratio must be non-negative");
    detail::require(pump_ratio_x < Scalar(1), "pump ratio must be below threshold (x < 1)");
    detail::require(escape_efficiency >= Scalar(0) && escape_efficiency <= Scalar(1),
                    "escape efficiency must be in [0, 1]");
  }
};

/// 1 - eta 4x / ((1+x)^2 + (f/gamma)^2), vacuum units, before detection loss.
template <typename Scalar>
Scalar squeezed_variance(const OpaSpectrumModel<Scalar>& m, Scalar frequency) {
  m.validate();
  detail::require(frequency >= Scalar(0), "sideband frequency must be non-negative");
  const Scalar x = m.pump_ratio_x;
  const Scalar w = frequency / m.gamma_hwhm;
  return Scalar(1) - m.escape_efficiency * Scalar(4) * x / ((Scalar(1) + x) * (Scalar(1) + x) + w * w);
}

/// 1 + eta 4x / ((1-x)^2 + (f/gamma)^2).
template <typename Scalar>
Scalar anti_squeezed_variance(const OpaSpectrumModel<Scalar>& m, Scalar frequency) {
  m.validate();
  detail::require(frequency >= Scalar(0), "sideband frequency must be non-negative");
  const Scalar x = m.pump_ratio_x;
  const Scalar w = frequency / m.gamma_hwhm;
  return Scalar(1) + m.escape_efficiency * Scalar(4) * x / ((Scalar(1) - x) * (Scalar(1) - x) + w * w);
}

template <typename Scalar>
Scalar pump_ratio(Scalar pump_power, Scalar threshold_power) {
  detail::require(threshold_power > Scalar(0), "threshold power must be positive");
  detail::require(pump_power >= Scalar(0), "pump power must be non-negative");
  detail::require(pump_power < threshold_power, "pump power must be below the oscillation threshold");
  using std::sqrt;
  return sqrt(pump_power / threshold_power);
}

/// Boyd-Kleinman focusing function for zero phase mismatch and no walk-off,
/// h(xi) = |int_{-xi}^{xi} dt / (1 + i t)|^2 / (4 xi), by adaptive quadrature.
inline double boyd_kleinman_h(double xi) {
  detail::require(xi > 0.0 && std::isfinite(xi), "focusing parameter must be positive");
  using C = std::complex<double>;
  const auto integral = integrate_adaptive<C>([](double t) { return 1.0 / C(1.0, t); }, -xi, xi, 1e-12);
  return std::norm(integral.value) / (4.0 * xi);
}

/// Rayleigh range pi w0^2 n / lambda inside a medium of index n.
inline double rayleigh_range(double waist, double index, double wavelength) {
  return std::numbers::pi * waist * waist * index / wavelength;
}

struct ThresholdInputs {
  double signal_wavelength = 1550e-9;  ///< m
  double waist_signal;                 ///< m
  double waist_pump;                   ///< m
  double d_eff;                        ///< m/V
  double crystal_length;               ///< m
  double index_signal;
  double index_pump;
  double absorption_signal = 0.0;  ///< 1/m
  double absorption_pump = 0.0;    ///< 1/m
  double output_transmission;      ///< T_out of the signal output coupler
  double signal_extra_loss;        ///< all other signal round-trip loss
  double pump_buildup;             ///< circulating / incident pump power

  void validate() const;
};

struct ThresholdResult {
  double focusing_xi;           ///< L / (2 z_R) for the signal mode
  double focusing_xi_pump;      ///< same for the pump, for checking confocal matching
  double focusing_h;
  double nonlinear_efficiency;  ///< E_nl, 1/W
  double circulating_power;     ///< W
  double input_power;           ///< W
};

/// Oscillation threshold where the single-pass amplitude gain sqrt(E_nl P)
/// equals half the signal round-trip loss.
ThresholdResult opo_threshold(const ThresholdInputs& in);

}  // namespace cvent
