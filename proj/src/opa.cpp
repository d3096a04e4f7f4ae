#include "cvent/opa.hpp"

#include <cmath>
#include <numbers>

namespace cvent {

void ThresholdInputs::validate() const {
  detail::require(signal_wavelength > 0, "signal wavelength must be positive");
  detail::require(waist_signal > 0 && waist_pump > 0, "waists must be positive");
  detail::require(d_eff > 0, "d_eff must be positive");
  detail::require(crystal_length > 0, "crystal length must be positive");
  detail::require(index_signal >= 1 && index_pump >= 1, "refractive indices must be >= 1");
  detail::require(absorption_signal >= 0 && absorption_pump >= 0, "absorption must be non-negative");
  detail::require(output_transmission > 0, "output transmission must be positive");
  detail::require(signal_extra_loss >= 0, "signal extra loss must be non-negative");
  detail::require(output_transmission + signal_extra_loss < 1, "T_out + extra loss must be < 1");
  detail::require(pump_buildup > 0, "pump buildup must be positive");
}

ThresholdResult opo_threshold(const ThresholdInputs& in) {
  in.validate();
  const double c = kSpeedOfLight;
  const double omega = 2.0 * std::numbers::pi * c / in.signal_wavelength;
  const double k_signal = 2.0 * std::numbers::pi * in.index_signal / in.signal_wavelength;
  const double pump_wavelength = in.signal_wavelength / 2.0;

  ThresholdResult out{};
  const double z_r = rayleigh_range(in.waist_signal, in.index_signal, in.signal_wavelength);
  out.focusing_xi = in.crystal_length / (2.0 * z_r);
  out.focusing_xi_pump =
      in.crystal_length / (2.0 * rayleigh_range(in.waist_pump, in.index_pump, pump_wavelength));
  out.focusing_h = boyd_kleinman_h(out.focusing_xi);

  const double numerator = 2.0 * omega * omega * in.d_eff * in.d_eff * in.crystal_length * k_signal * out.focusing_h;
  const double denominator = std::numbers::pi * kVacuumPermittivity * c * c * c * in.index_signal *
                             in.index_signal * in.index_pump;
  out.nonlinear_efficiency = numerator / denominator;
  if (!(out.nonlinear_efficiency > 0.0) || !std::isfinite(out.nonlinear_efficiency)) {
    throw NumericalError("nonlinear conversion efficiency evaluated to zero");
  }
  const double half_loss = 0.5 * (in.output_transmission + in.signal_extra_loss);
  out.circulating_power = half_loss * half_loss / out.nonlinear_efficiency;
  out.input_power = out.circulating_power / in.pump_buildup;
  return out;
}

}  // namespace cvent
