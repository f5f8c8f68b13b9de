#pragma once

#include <stdexcept>
#include <string>

namespace mmot {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array extents do not match the grid they are used with.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (negative mass, bad index...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numeric parameter is out of range (non-positive step size, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// An iterative inner solve did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved_residual)
      : Error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const noexcept { return achieved_residual_; }

 private:
  double achieved_residual_;
};

/// A post-processing step received output it cannot interpret.
class DegenerateOutputError : public Error {
 public:
  using Error::Error;
};

/// A run configuration is malformed; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A run directory lacks a file a command needs.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmot
