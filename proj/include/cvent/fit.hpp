#pragma once

// Bounded nonlinear least squares of the analytic chain against a measured
// (or synthetic) spectrum.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cvent/analyzer.hpp"

namespace cvent::fit {

enum class Parameter { kEtaTotal, kPumpRatioX, kGammaHwhm, kGainRatio, kClearanceOffsetDb };

/// Name used in configs and reports. Gamma is reported in Hz here; the
/// config layer handles unit suffixes.
std::string to_string(Parameter p);
Parameter parameter_from_string(const std::string& name);

struct FreeParameter {
  Parameter id;
  double lower;
  double upper;
  std::optional<double> initial;
};

enum class Target { kQuadratures, kDuan };
enum class Domain { kDb, kLinear };

struct FitData {
  Grid grid;
  std::vector<double> var_xsum_db;
  std::vector<double> var_ydiff_db;
  std::vector<double> duan;      ///< used by Target::kDuan
  std::vector<double> sigma_db;  ///< per point, dB

  static FitData from_traces(const TraceSet& traces, double sigma_db);
};

struct FrequencyWindow {
  double lower_hz;
  double upper_hz;
  bool contains(double f) const { return f >= lower_hz && f <= upper_hz; }
};

struct FitOptions {
  int starts = 8;
  std::uint64_t seed = 1;
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  int tolerance_iterations = 3;
  double fd_relative_step = 1e-6;
};

struct FitProblem {
  FitData data;
  std::vector<FreeParameter> free;
  ExperimentModel fixed;
  std::vector<BandSplit> band_splits;
  std::vector<FrequencyWindow> exclusion_windows;
  Target target = Target::kQuadratures;
  Domain domain = Domain::kDb;
  FitOptions options;

  void validate() const;
  std::vector<std::size_t> unmasked_indices() const;
};

/// Copy of `base` with the free parameters set to theta.
ExperimentModel apply_parameters(const ExperimentModel& base, const std::vector<FreeParameter>& free,
                                 const Eigen::VectorXd& theta);

/// Weighted residuals (model - data) / sigma over unmasked points; in the
/// quadrature target the X-sum block precedes the Y-difference block.
Eigen::VectorXd model_residuals(const Eigen::VectorXd& theta, const FitProblem& problem);

struct StartSummary {
  Eigen::VectorXd initial;
  Eigen::VectorXd estimate;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_history;  ///< after each accepted step, starts with the initial value
};

struct FitResult {
  std::vector<FreeParameter> free;
  Eigen::VectorXd parameters;
  Eigen::VectorXd uncertainties;
  Eigen::MatrixXd covariance;
  std::vector<bool> at_bound;
  double objective = 0.0;       ///< 0.5 * sum of squared weighted residuals
  double residual_rms = 0.0;    ///< weighted RMS, ~1 for a good fit with correct sigma
  double residual_rms_db = 0.0; ///< unweighted RMS in dB
  std::size_t points = 0;
  int iterations = 0;
  bool converged = false;
  std::size_t best_start = 0;
  std::vector<StartSummary> starts;

  std::optional<double> value(Parameter p) const;
};

FitResult fit(const FitProblem& problem);

}  // namespace cvent::fit
