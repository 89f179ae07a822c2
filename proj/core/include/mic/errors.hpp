#pragma once

#include <stdexcept>
#include <string>

namespace mic {

/// Malformed or inconsistent input data (files, event logs, graphs).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular systems, diverged solvers, unstable regimes.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Writes a one-line warning to stderr. Used sparingly (degenerate mixing).
void warn(const std::string& message);

}  // namespace mic
