#pragma once

#include <stdexcept>
#include <string>

namespace centaur {

/// Invalid algorithm parameter (bad threshold, probability outside [0,1], ...).
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed data handed to an operation (NaN entries, shape mismatch, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Numerical failure (rank deficiency, quadrature non-convergence, diverged state).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Cross-validation selection found no majority candidate.
class SelectionError : public std::runtime_error {
 public:
  explicit SelectionError(const std::string& what) : std::runtime_error(what) {}
};

/// Experiment configuration rejected; message carries the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Constant calibration could not complete (pilot failed to converge).
class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace centaur
