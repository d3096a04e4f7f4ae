#pragma once

// Subcommands behind the `cvent` executable. Each reads an experiment
// config, runs one part of the toolkit and writes its results to an output
// directory.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cvent/config.hpp"

namespace cvent::cli {

enum ExitCode : int { kSuccess = 0, kUsageError = 1, kNumericalFailure = 2 };

enum class Format { kCsv, kJson };

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  Format format = Format::kCsv;
  std::optional<std::uint64_t> seed;        ///< overrides the config seed
  std::optional<std::filesystem::path> data;  ///< fit input, overrides fit.data
  bool montecarlo = false;                  ///< synth: also run the time-domain oracle
};

struct CommandResult {
  std::vector<std::filesystem::path> files;  ///< written, in order
  std::string report;                        ///< human-readable summary
  int exit_code = kSuccess;
};

CommandResult cmd_cavity(const config::ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_threshold(const config::ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_spectrum(const config::ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_synth(const config::ExperimentConfig& cfg, const CommandOptions& opt);
CommandResult cmd_fit(const config::ExperimentConfig& cfg, const CommandOptions& opt);

/// Full command line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cvent::cli
