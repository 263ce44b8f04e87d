#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pinntk/analytic_kernel.hpp"
#include "pinntk/network.hpp"

namespace pinntk {

/// Training block of an experiment config ("train" object in the JSON).
struct TrainSection {
  bool present = false;
  std::string variant = "plain";      // plain | masked | masked_second | pinn
  std::string optimizer = "gd";       // gd (with kernel-flow comparison) | adam
  std::string norm = "half";          // half | mean
  double freq_a = 1.0;                // sine target frequency
  double w = 0.5;                     // interior/boundary split of pinn
  double lr = 1e-5;
  long steps = 1000;
  int grid_n = 21;                    // comparison grid resolution (gd)
};

/// Spectrum-ratio block ("ratio" object): compare the plain kernel spectrum
/// against the operator-applied one through index J.
struct RatioSection {
  bool present = false;
  double c_t = 0.0;   // comparison constant, must be set explicitly
  double slack = 0.1;
  long J = 20;
};

/// One experiment run, parsed from a JSON config file.  Parsing is lenient:
/// structural problems are collected as violations and reported by
/// validate() rather than thrown, so a single pass can list everything
/// wrong with a config.
struct ExperimentConfig {
  std::string command;  // kernel | spectrum | converge | train | ratio

  KernelSpec kernel;
  bool has_kernel = false;
  NetworkConfig network;
  bool has_network = false;

  std::vector<std::string> operators;
  int dim = 1;
  long n = 10;                         // samples (or grid size for kernel/ratio)
  std::vector<std::uint64_t> seeds;    // "seed" scalar or "seeds" array
  std::string out;                     // output directory
  double interval_lo = 0.0;            // sampling interval (per coordinate)
  double interval_hi = 1.0;
  std::vector<int> width_sweep;        // converge: hidden widths to scan
  bool svg = false;

  TrainSection train;
  RatioSection ratio;

  nlohmann::json echo;                   // raw config, echoed into manifests
  std::vector<std::string> parse_violations;
};

/// Parse a JSON config document.  Throws ConfigError only when the text is
/// not valid JSON or not a JSON object; field-level problems land in
/// parse_violations instead.
ExperimentConfig parse_config(const std::string& json_text);

/// Read and parse a config file.  IoError when the file cannot be read.
ExperimentConfig load_config_file(const std::filesystem::path& path);

/// Full validation: parse problems plus semantic checks.  Empty result
/// means run_experiment would accept the config.  Each entry names the
/// offending field and the violated constraint.
std::vector<std::string> validate(const ExperimentConfig& cfg);

}  // namespace pinntk
