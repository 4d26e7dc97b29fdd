#pragma once

#include <stdexcept>
#include <string>

namespace lowenv {

/// Failure during a computation (bad arguments to a numerical routine, solver
/// failure, inapplicable certification route). Maps to CLI exit status 1.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Density requested from a distribution that only exposes a cdf.
class DensityUnavailable : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Every objective evaluated by the box minimizer was NaN.
class SolverFailure : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// A certification route whose inputs (gradients, envelope, finite index
/// set, ...) are not available for the given setup.
class RouteInapplicable : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

/// Configuration did not validate. Maps to CLI exit status 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace lowenv
