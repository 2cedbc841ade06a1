#pragma once

#include <stdexcept>
#include <string>

namespace rednet {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
  ok = 0,
  config_error = 2,
  data_error = 3,
  numeric_failure = 4,
  gradcheck_failure = 5,
};

/// Tensor shapes disagree at an operation or network junction.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or unknown configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, malformed, or inconsistent input data (files, labels, manifests).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite loss or state during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rednet
