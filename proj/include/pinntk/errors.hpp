#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pinntk {

/// Numerical breakdown at runtime: divergence, degenerate geometry,
/// failed decompositions.  The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble while writing artifacts.  CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; carries the full violation list.
/// CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration";
    for (const auto& e : v) s += "\n  - " + e;
    return s;
  }

  std::vector<std::string> violations_;
};

}  // namespace pinntk
