#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pinntk/config.hpp"
#include "pinntk/errors.hpp"
#include "pinntk/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pinntk: analytic and finite-width neural tangent kernels under "
      "differential operators"};
  app.set_version_flag("--version", pinntk::version_string());

  std::string command;
  std::string config_path;
  std::string out_override;
  long long seed_override = 0;
  int jobs = 1;

  app.add_option("command", command, "kernel | spectrum | converge | train | ratio")
      ->required()
      ->check(CLI::IsMember(
          {"kernel", "spectrum", "converge", "train", "ratio"}));
  app.add_option("--config", config_path, "path to a JSON experiment config")
      ->required();
  auto* seed_opt = app.add_option(
      "--seed", seed_override, "override the config's seed(s) with one seed");
  auto* out_opt = app.add_option("--out", out_override,
                                 "override the config's output directory");
  app.add_option("--jobs", jobs, "worker threads for sweep entries")
      ->check(CLI::Range(1, 256));

  CLI11_PARSE(app, argc, argv);

  try {
    pinntk::ExperimentConfig cfg = pinntk::load_config_file(config_path);
    if (cfg.command.empty()) {
      cfg.command = command;
    } else if (cfg.command != command) {
      throw pinntk::ConfigError({"command in config (" + cfg.command +
                                 ") conflicts with the command argument (" +
                                 command + ")"});
    }
    if (seed_opt->count() > 0) {
      if (seed_override < 0) {
        throw pinntk::ConfigError({"seed values must be non-negative"});
      }
      cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    }
    if (out_opt->count() > 0) {
      cfg.out = out_override;
    }

    pinntk::RunResult res = pinntk::run_experiment(cfg, jobs);
    std::printf("wrote %zu file(s) to %s\n", res.outputs.size() + 1,
                res.out_dir.string().c_str());
    for (const std::string& f : res.outputs) {
      std::printf("  %s\n", f.c_str());
    }
    std::printf("  manifest.json\n");
    return 0;
  } catch (const pinntk::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const pinntk::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const pinntk::IoError& e) {
    std::fprintf(stderr, "i/o failure: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
