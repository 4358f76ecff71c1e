#pragma once

#include <stdexcept>
#include <string>

namespace siamte {

/// Bad or inconsistent configuration / arguments. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

/// A required input (file, directory, checkpoint) is absent or unreadable.
/// CLI maps this to exit code 3.
struct MissingInputError : std::runtime_error {
  explicit MissingInputError(const std::string& m) : std::runtime_error(m) {}
};

/// Numerical failure (non-finite values, degenerate inputs). CLI exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace siamte
