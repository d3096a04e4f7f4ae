#include "cvent/channel.hpp"

namespace cvent {

void DetectionChain::validate() const {
  for (double v : {propagation_efficiency, overlap_efficiency, quantum_efficiency}) {
    detail::require(v >= 0.0 && v <= 1.0, "efficiency components must be in [0, 1]");
  }
  if (total_efficiency) {
    detail::require(*total_efficiency >= 0.0 && *total_efficiency <= 1.0, "total efficiency must be in [0, 1]");
  }
  detail::require(gain_ratio > 0.0 && std::isfinite(gain_ratio), "gain ratio must be positive");
  detail::require(std::isfinite(clearance_offset_db), "clearance offset must be finite");
}

JointQuadratureSpectra joint_variances_with_gains(const CovarianceSpectrum& cov, const Curve& gain_a_db,
                                                  const Curve& gain_b_db) {
  JointQuadratureSpectra out{cov.grid, {}, {}};
  out.var_xsum.reserve(cov.size());
  out.var_ydiff.reserve(cov.size());
  for (std::size_t i = 0; i < cov.size(); ++i) {
    const double f = cov.grid[i];
    const auto j = joint_variances(cov.matrices[i], amplitude_from_db(gain_a_db.value_db(f)),
                                   amplitude_from_db(gain_b_db.value_db(f)));
    out.var_xsum.push_back(j.xsum);
    out.var_ydiff.push_back(j.ydiff);
  }
  return out;
}

DarkNoise dark_noise_at(const DetectionChain& chain, double f) {
  DarkNoise d;
  if (chain.clearance_a) d.a = ratio_from_db(-(chain.clearance_a->value_db(f) + chain.clearance_offset_db));
  if (chain.clearance_b) d.b = ratio_from_db(-(chain.clearance_b->value_db(f) + chain.clearance_offset_db));
  return d;
}

JointQuadratureSpectra apply_dark_noise(const JointQuadratureSpectra& spectra, const DetectionChain& chain) {
  JointQuadratureSpectra out = spectra;
  for (std::size_t i = 0; i < spectra.grid.size(); ++i) {
    const double f = spectra.grid[i];
    const double g_a = chain.gain_ratio * amplitude_from_db(chain.gain_a_db.value_db(f));
    const double g_b = amplitude_from_db(chain.gain_b_db.value_db(f));
    const double d = combined_dark(dark_noise_at(chain, f), g_a, g_b);
    out.var_xsum[i] = with_dark_noise(spectra.var_xsum[i], d, chain.dark_noise_subtracted);
    out.var_ydiff[i] = with_dark_noise(spectra.var_ydiff[i], d, chain.dark_noise_subtracted);
  }
  return out;
}

}  // namespace cvent
