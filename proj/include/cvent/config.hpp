#pragma once

// Experiment configuration document. Structs mirror the JSON fields in the
// units named by their suffixes; the build_* functions convert to SI and
// assemble the model objects. Keeping the document form separate from the
// model makes writing a config back out and re-reading it exact.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvent/analyzer.hpp"
#include "cvent/cavity.hpp"
#include "cvent/curve.hpp"
#include "cvent/error.hpp"
#include "cvent/fit.hpp"
#include "cvent/montecarlo.hpp"
#include "cvent/opa.hpp"

namespace cvent::config {

/// Invalid or incomplete document; the message carries the field path or
/// the line/column of a syntax error.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A dB curve given as a constant, inline knots (MHz, dB) or a CSV file
/// with `frequency_hz,value_db` rows. Relative CSV paths resolve against the
/// directory of the config document.
struct CurveSpec {
  std::optional<double> constant_db;
  std::vector<std::pair<double, double>> knots_mhz_db;
  std::string csv_path;

  static CurveSpec constant(double db) { return CurveSpec{db, {}, {}}; }
  Curve resolve(const std::filesystem::path& base_dir) const;
  bool operator==(const CurveSpec&) const = default;
};

struct CavityBlock {
  std::string name;
  double wavelength_nm = 0.0;
  double refractive_index = 1.0;
  double r1 = 0.0;
  double r2 = 0.0;
  /// Explicit round-trip loss; otherwise 2 L alpha from the absorption.
  std::optional<double> round_trip_loss;
  double absorption_ppm_per_cm = 0.0;
  bool operator==(const CavityBlock&) const = default;
};

struct CavityConfig {
  double length_mm = 0.0;
  std::vector<CavityBlock> blocks;
  /// Incident powers for which the circulating power is reported.
  std::vector<double> input_powers_mw;
  bool operator==(const CavityConfig&) const = default;
};

/// Threshold estimate; geometry and mirror losses come from the cavity
/// blocks named here.
struct ThresholdConfig {
  std::string signal_block = "signal";
  std::string pump_block = "pump";
  double waist_signal_um = 0.0;
  double waist_pump_um = 0.0;
  double d_eff_pm_per_v = 0.0;
  bool operator==(const ThresholdConfig&) const = default;
};

struct SourceConfig {
  std::optional<double> pump_ratio_x;
  std::optional<double> pump_power_mw;
  std::optional<double> threshold_power_mw;
  bool threshold_from_model = false;  ///< use the computed threshold instead
  std::optional<double> gamma_hwhm_mhz;
  std::optional<std::string> gamma_from_cavity;  ///< cavity block name
  double escape_efficiency = 0.999;
  bool operator==(const SourceConfig&) const = default;
};

struct EntanglerDoc {
  double relative_phase_deg = 90.0;
  double beam_splitter_reflectivity = 0.5;
  bool operator==(const EntanglerDoc&) const = default;
};

struct DetectionDoc {
  std::optional<double> total_efficiency;
  double overlap_efficiency = 1.0;
  std::optional<double> visibility;  ///< sets the overlap efficiency to visibility^2
  double propagation_efficiency = 1.0;
  double quantum_efficiency = 1.0;
  CurveSpec gain_a_db = CurveSpec::constant(0.0);
  CurveSpec gain_b_db = CurveSpec::constant(0.0);
  double gain_ratio = 1.0;
  std::optional<CurveSpec> clearance_a_db;
  std::optional<CurveSpec> clearance_b_db;
  double clearance_offset_db = 0.0;
  bool dark_noise_subtracted = false;
  bool operator==(const DetectionDoc&) const = default;
};

/// Either LO powers (gain proportional to sqrt(P)) or amplitude gains.
struct BandSplitDoc {
  double lower_mhz = 0.0;
  double upper_mhz = 0.0;
  std::optional<double> lo_power_a_mw;
  std::optional<double> lo_power_b_mw;
  std::optional<double> gain_a;
  std::optional<double> gain_b;
  bool operator==(const BandSplitDoc&) const = default;
};

struct SweepDoc {
  double start_mhz = 2.0;
  double stop_mhz = 1480.0;
  int points = 740;
  double rbw_mhz = 3.0;
  double vbw_khz = 1.0;
  double sweep_time_ms = 540.0;
  int averages = 1;
  std::vector<BandSplitDoc> band_splits;
  bool operator==(const SweepDoc&) const = default;
};

struct MonteCarloDoc {
  double sample_rate_mhz = 4000.0;
  std::uint64_t n_samples = std::uint64_t{1} << 22;
  std::uint64_t segment_length = 4096;
  double overlap_fraction = 0.5;
  std::string window = "hann";
  std::uint64_t batches = 64;
  double lower_mhz = 1.0;
  double upper_mhz = 1480.0;
  double bin_width_mhz = 10.0;
  bool with_reid = false;
  bool dump_raw = false;
  bool operator==(const MonteCarloDoc&) const = default;
};

struct SpurDoc {
  double frequency_mhz = 0.0;
  double amplitude_db = 0.0;
  bool operator==(const SpurDoc&) const = default;
};

struct SynthDoc {
  std::optional<double> sigma_db;  ///< defaults to the sweep's estimator sigma
  std::vector<SpurDoc> spurs;
  bool operator==(const SynthDoc&) const = default;
};

/// Free parameter; `gamma_hwhm_mhz` bounds are in MHz, all others unitless or dB.
struct FreeParameterDoc {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> initial;
  bool operator==(const FreeParameterDoc&) const = default;
};

struct FitDoc {
  std::vector<FreeParameterDoc> free;
  std::string target = "quadratures";
  std::string domain = "db";
  std::optional<double> sigma_db;
  std::vector<std::pair<double, double>> exclusion_windows_mhz;
  int starts = 8;
  int max_iterations = 500;
  std::optional<std::string> data;  ///< trace CSV, relative to the config
  bool operator==(const FitDoc&) const = default;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::optional<CavityConfig> cavity;
  std::optional<ThresholdConfig> threshold;
  std::array<SourceConfig, 2> sources;
  EntanglerDoc entangler;
  DetectionDoc detection;
  SweepDoc sweep;
  std::optional<MonteCarloDoc> montecarlo;
  SynthDoc synth;
  std::optional<FitDoc> fit;

  std::filesystem::path base_dir;  ///< not serialized

  bool operator==(const ExperimentConfig& o) const;
};

ExperimentConfig parse(const std::string& text, const std::string& source_name = "config",
                       const std::filesystem::path& base_dir = ".");
ExperimentConfig load(const std::filesystem::path& path);
/// Canonical JSON text; parse(to_json_string(c)) == c.
std::string to_json_string(const ExperimentConfig& cfg, int indent = 2);

struct NamedCavity {
  std::string name;
  double wavelength_m;
  CavityGeometry<double> geometry;
  CavityFigures<double> figures;
};

std::vector<NamedCavity> build_cavities(const ExperimentConfig& cfg);
ThresholdInputs build_threshold_inputs(const ExperimentConfig& cfg);
ExperimentModel build_model(const ExperimentConfig& cfg);
SweepConfig build_sweep(const ExperimentConfig& cfg);
double synth_sigma_db(const ExperimentConfig& cfg);
std::vector<Spur> build_spurs(const ExperimentConfig& cfg);
mc::SynthesisConfig build_synthesis(const ExperimentConfig& cfg);
mc::EmpiricalOptions build_empirical_options(const ExperimentConfig& cfg);
/// Fit problem over `data`, with the config's model as the fixed part.
fit::FitProblem build_fit_problem(const ExperimentConfig& cfg, const TraceSet& data);

}  // namespace cvent::config
