#pragma once

// Stochastic oracle for the analytic chain. Stationary Gaussian quadrature
// time series are synthesized with prescribed spectra, pushed through the
// beam splitter, loss, detector gains and dark noise sample by sample, and
// read back with a Welch estimator.
//
// PSD convention: unit-variance white noise has PSD 1 at every frequency, so
// a series with PSD V(f) has the same normalization as a quadrature variance.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvent/analyzer.hpp"
#include "cvent/curve.hpp"
#include "cvent/opa.hpp"

namespace cvent::mc {

enum class Window { kHann, kRectangular };

struct SynthesisConfig {
  double sample_rate_hz = 4e9;
  std::size_t n_samples = std::size_t{1} << 22;
  std::uint64_t seed = 1;
  std::size_t segment_length = 4096;
  double overlap_fraction = 0.5;
  Window window = Window::kHann;
  std::size_t batches = 64;  ///< batch means for standard errors

  void validate(double max_analysis_hz = 0.0) const;
};

struct QuadratureTrace {
  std::vector<double> samples;
  std::string stage;  ///< which chain stage produced it

  std::size_t size() const { return samples.size(); }
};

using PsdFunction = std::function<double(double frequency_hz)>;

/// Spectral coloring: a Hermitian complex Gaussian spectrum scaled by
/// sqrt(V(f_k)) and inverse transformed. `stream` selects an independent
/// random stream under the same seed.
QuadratureTrace synthesize_colored_noise(const PsdFunction& target_psd, const SynthesisConfig& cfg,
                                         std::uint64_t stream, std::string stage = "source");

/// Unit-variance white Gaussian series (vacuum).
QuadratureTrace synthesize_white_noise(const SynthesisConfig& cfg, std::uint64_t stream, std::string stage = "vacuum");

/// Both quadratures of one squeezed source, squeezed in X.
struct SourceTraces {
  QuadratureTrace x;
  QuadratureTrace y;
};

SourceTraces synthesize_source(const OpaSpectrumModel<double>& model, const SynthesisConfig& cfg,
                               std::uint64_t stream_base);

/// Operations applied in the time domain. Gains are frequency independent.
struct TimeDomainChain {
  double relative_phase;
  double beam_splitter_reflectivity = 0.5;
  double eta_a = 1.0;
  double eta_b = 1.0;
  double gain_a = 1.0;
  double gain_b = 1.0;
  std::optional<Curve> clearance_a;  ///< held constant beyond its table
  std::optional<Curve> clearance_b;
};

/// Builds the time-domain chain equivalent to an analytic model. Requires
/// frequency-independent gains.
TimeDomainChain chain_from_model(const ExperimentModel& model);

/// Individual detector outputs for the X and Y settings plus vacuum
/// calibration records (blocked signal path) of each detector.
struct DetectorTraces {
  QuadratureTrace x_a, x_b;
  QuadratureTrace y_a, y_b;
  QuadratureTrace vac_a, vac_b;
};

DetectorTraces simulate_chain(SourceTraces source_1, SourceTraces source_2, const TimeDomainChain& chain,
                              const SynthesisConfig& cfg);

struct WelchEstimate {
  std::vector<double> frequency_hz;  ///< bins 0 .. segment/2
  Eigen::VectorXd psd;               ///< mean over all segments
  Eigen::MatrixXd batch_psd;         ///< bins x batches, per-batch means
  std::size_t segments = 0;
};

WelchEstimate welch_psd(std::span<const double> samples, const SynthesisConfig& cfg);
inline WelchEstimate welch_psd(const QuadratureTrace& trace, const SynthesisConfig& cfg) {
  return welch_psd(std::span<const double>(trace.samples), cfg);
}

/// Coarse analysis bins over [lower, upper] of width `bin_width_hz`; each
/// groups whole Welch bins.
struct EmpiricalSpectrum {
  std::vector<double> center_hz;
  std::vector<std::size_t> first_bin;  ///< Welch bin range [first, last)
  std::vector<std::size_t> last_bin;
  std::vector<double> welch_frequency_hz;

  std::vector<double> var_xsum;
  std::vector<double> var_ydiff;
  std::vector<double> duan;
  std::vector<double> duan_standard_error;
  std::vector<double> reid;  ///< NaN unless requested

  CriteriaSpectrum criteria() const;
  /// Same columns as the analyzer CSV.
  TraceSet as_traces() const;
};

struct EmpiricalOptions {
  double lower_hz = 1e6;
  double upper_hz = 1480e6;
  double bin_width_hz = 10e6;
  bool with_reid = false;
};

EmpiricalSpectrum empirical_duan_spectrum(const DetectorTraces& traces, const SynthesisConfig& cfg,
                                          const EmpiricalOptions& options = {});

/// Analytic Duan averaged over the same Welch bins as the empirical estimate.
std::vector<double> analytic_binned_duan(const ExperimentModel& model, const EmpiricalSpectrum& spectrum);

struct OracleComparison {
  std::size_t bins = 0;
  std::size_t within = 0;  ///< |D_emp - D_model| < sigmas * SE
  double max_abs_z = 0.0;
  double fraction() const { return bins == 0 ? 0.0 : double(within) / double(bins); }
};

OracleComparison compare_to_model(const EmpiricalSpectrum& empirical, const std::vector<double>& analytic,
                                  double sigmas = 3.0);

/// Synthesizes both sources, runs the chain and estimates the spectrum.
struct OracleRun {
  EmpiricalSpectrum empirical;
  std::vector<double> analytic;
  OracleComparison comparison;
};

OracleRun run_oracle(const ExperimentModel& model, const SynthesisConfig& cfg, const EmpiricalOptions& options = {});

/// Little-endian float64 samples plus a JSON sidecar `<path>.json`.
void write_raw_trace(const std::filesystem::path& path, const QuadratureTrace& trace, const SynthesisConfig& cfg);

}  // namespace cvent::mc
