#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinntk/config.hpp"

namespace pinntk {

std::string version_string();

struct RunResult {
  std::filesystem::path out_dir;
  std::vector<std::string> outputs;  // file names relative to out_dir
  nlohmann::json summary;            // command-specific result digest
};

/// Validate and execute one experiment, writing its CSV artifacts and a
/// manifest.json into the output directory.  The directory is resolved
/// against the PINNTK_OUT_ROOT environment variable when the configured
/// path is relative, and is only created after validation passes, so a
/// rejected config leaves no files behind.
///
/// jobs > 1 runs independent sweep entries (widths x seeds in converge)
/// on that many threads; results are identical to the serial order.
///
/// Throws ConfigError for invalid configs, NumericalError for numerical
/// breakdowns, IoError for filesystem failures.
RunResult run_experiment(const ExperimentConfig& cfg, int jobs = 1);

}  // namespace pinntk
