#pragma once

// Figures of merit of a two-mirror standing-wave cavity (the monolithic
// crystal with two coated faces) at one wavelength.

#include <cmath>
#include <numbers>

#include "cvent/error.hpp"

namespace cvent {

inline constexpr double kSpeedOfLight = 299'792'458.0;      // m/s
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

template <typename Scalar = double>
struct CavityGeometry {
  Scalar length;            ///< geometric length, m
  Scalar refractive_index;  ///< at the wavelength considered
  Scalar r1;                ///< power reflectivity of face 1 (input coupler)
  Scalar r2;                ///< power reflectivity of face 2 (output coupler)
  Scalar round_trip_loss = Scalar(0);

  /// Amplitude round-trip factor sqrt(R1 R2 (1 - loss)).
  Scalar round_trip_amplitude() const {
    using std::sqrt;
    return sqrt(r1 * r2 * (Scalar(1) - round_trip_loss));
  }

  void validate() const {
    detail::require(length > Scalar(0), "cavity length must be positive");
    detail::require(refractive_index >= Scalar(1), "refractive index must be >= 1");
    detail::require(r1 >= Scalar(0) && r1 <= Scalar(1), "R1 must be in [0, 1]");
    detail::require(r2 >= Scalar(0) && r2 <= Scalar(1), "R2 must be in [0, 1]");
    detail::require(round_trip_loss >= Scalar(0) && round_trip_loss < Scalar(1),
                    "round-trip loss must be in [0, 1)");
    detail::require(r1 * r2 * (Scalar(1) - round_trip_loss) < Scalar(1),
                    "cavity is lossless (R1*R2*(1-loss) must be < 1)");
  }
};

/// Double-pass absorption loss 2*L*alpha for an absorption coefficient in 1/m.
template <typename Scalar>
Scalar absorption_round_trip_loss(Scalar length, Scalar alpha_per_m) {
  return Scalar(2) * length * alpha_per_m;
}

template <typename Scalar = double>
struct CavityFigures {
  Scalar fsr;
  Scalar finesse;
  Scalar fwhm;
  Scalar hwhm;
  Scalar buildup;
  Scalar escape_efficiency;
};

/// c / (2 n L), Hz.
template <typename Scalar>
Scalar free_spectral_range(const CavityGeometry<Scalar>& g) {
  g.validate();
  return Scalar(kSpeedOfLight) / (Scalar(2) * g.refractive_index * g.length);
}

/// pi sqrt(rho) / (1 - rho). Zero when either mirror is absent.
template <typename Scalar>
Scalar finesse(const CavityGeometry<Scalar>& g) {
  g.validate();
  using std::sqrt;
  const Scalar rho = g.round_trip_amplitude();
  return std::numbers::pi_v<Scalar> * sqrt(rho) / (Scalar(1) - rho);
}

template <typename Scalar>
Scalar linewidth_fwhm(const CavityGeometry<Scalar>& g) {
  const Scalar f = finesse(g);
  if (f == Scalar(0)) throw InvalidArgument("linewidth undefined for a cavity with zero finesse");
  return free_spectral_range(g) / f;
}

/// Circulating over incident power on resonance, light entering through face 1.
template <typename Scalar>
Scalar power_buildup(const CavityGeometry<Scalar>& g) {
  g.validate();
  detail::require(g.r1 < Scalar(1), "power buildup needs a transmissive input coupler (R1 < 1)");
  const Scalar rho = g.round_trip_amplitude();
  const Scalar denom = Scalar(1) - rho;
  return (Scalar(1) - g.r1) / (denom * denom);
}

/// T_out / (T_out + T_other + loss), with face 2 as the output coupler.
template <typename Scalar>
Scalar escape_efficiency(const CavityGeometry<Scalar>& g) {
  g.validate();
  const Scalar t_out = Scalar(1) - g.r2;
  const Scalar total = t_out + (Scalar(1) - g.r1) + g.round_trip_loss;
  detail::require(total > Scalar(0), "escape efficiency undefined for a cavity without loss channels");
  return t_out / total;
}

template <typename Scalar>
CavityFigures<Scalar> figures_of_merit(const CavityGeometry<Scalar>& g) {
  CavityFigures<Scalar> out{};
  out.fsr = free_spectral_range(g);
  out.finesse = finesse(g);
  out.fwhm = linewidth_fwhm(g);
  out.hwhm = out.fwhm / Scalar(2);
  out.buildup = g.r1 < Scalar(1) ? power_buildup(g) : Scalar(0);
  out.escape_efficiency = escape_efficiency(g);
  return out;
}

}  // namespace cvent
