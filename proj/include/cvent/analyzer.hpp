#pragma once

// Spectrum-analyzer emulation: evaluates the full source -> channel ->
// criteria chain on a sweep grid and adds realistic display noise.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cvent/channel.hpp"
#include "cvent/criteria.hpp"
#include "cvent/quadrature.hpp"

namespace cvent {

/// Everything needed to predict a measured spectrum.
struct ExperimentModel {
  EntanglerConfig<double> entangler;
  DetectionChain detection;

  void validate() const {
    entangler.validate();
    detection.validate();
  }
};

/// Amplitude gains applied to the detectors inside [lower_hz, upper_hz],
/// e.g. from a local-oscillator power change between two sub-sweeps.
struct BandSplit {
  double lower_hz;
  double upper_hz;
  double gain_a;
  double gain_b;
  bool contains(double f) const { return f >= lower_hz && f <= upper_hz; }
};

/// Band-split gains at f (unity without splits); throws when f falls in no band.
DetectorGains band_gains_at(const std::vector<BandSplit>& splits, double frequency_hz);

struct SweepConfig {
  Grid grid;
  double rbw_hz = 3e6;
  double vbw_hz = 1e3;
  double sweep_time_s = 0.54;
  int averages = 1;
  std::vector<BandSplit> band_splits;

  void validate() const;
  DetectorGains band_gains(double f) const { return band_gains_at(band_splits, f); }
};

/// Per-frequency result of the analytic chain.
struct ModelPoint {
  Covariance4<double> optical;  ///< after detection loss, before the detectors
  JointVariances joint;         ///< as displayed, including gain imbalance and dark noise
  double dark = 0.0;            ///< combined dark variance in vacuum units
  double duan = 0.0;
  double reid = 0.0;            ///< from the per-detector normalized covariance
};

ModelPoint evaluate_point(const ExperimentModel& model, double frequency_hz,
                          const DetectorGains& band_gains = {});

/// Named traces normalized to the combined vacuum level.
struct TraceSet {
  Grid grid;
  std::vector<double> var_xsum_db;
  std::vector<double> var_ydiff_db;
  std::vector<double> duan;
  std::vector<double> tms_db;
  std::vector<double> reid_product;
  std::vector<double> vacuum_db;
  std::vector<double> dark_db;

  std::size_t size() const { return grid.size(); }
};

TraceSet sweep(const ExperimentModel& model, const SweepConfig& sweep);

/// One-sigma display fluctuation of an averaged power trace,
/// 10/ln(10)/sqrt(M) with M = (rbw/vbw) * averages independent samples.
double estimator_sigma_db(double rbw_hz, double vbw_hz, int averages);

struct Spur {
  double frequency_hz;
  double amplitude_db;
};

/// Adds independent N(0, sigma_db) noise in dB to both quadrature traces
/// and recomputes the Duan and squeezing columns. Point i of channel c uses
/// a counter-based stream keyed by (seed, c, i).
TraceSet noisy_trace(const TraceSet& clean, double sigma_db, std::uint64_t seed,
                     const std::vector<Spur>& spurs = {});
TraceSet noisy_trace(const TraceSet& clean, const SweepConfig& sweep, std::uint64_t seed,
                     const std::vector<Spur>& spurs = {});

/// Standard normal deviate for a (seed, stream, counter) triple.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

inline constexpr const char* kTraceCsvHeader = "frequency_hz,var_xsum_db,var_ydiff_db,duan,tms_db,reid_product";

std::string trace_to_csv(const TraceSet& traces);
/// Parses the CSV schema above; dark/vacuum columns are left empty.
TraceSet trace_from_csv(const std::string& text, const std::string& source_name = "trace");

}  // namespace cvent
