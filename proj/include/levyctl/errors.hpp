#pragma once

#include <stdexcept>
#include <string>

namespace levyctl {

// Base of every error raised by the library. The CLI maps subclasses to exit
// codes, so new errors should derive from one of the families below.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected model or configuration (exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class InvalidModel : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NonConvexSpec : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Configuration field error; `path` is the dotted location of the field.
class ConfigError : public ValidationError {
 public:
  ConfigError(std::string path, const std::string& message)
      : ValidationError(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Problem-level failures of the control characterization (exit code 3).
class ControlError : public Error {
 public:
  using Error::Error;
};

class AssumptionViolated : public ControlError {
 public:
  using ControlError::ControlError;
};

class NoSignChange : public ControlError {
 public:
  using ControlError::ControlError;
};

/// Numerical failures (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

class NonFiniteSample : public NumericError {
 public:
  using NumericError::NumericError;
};

class NotSpectrallyNegative : public ControlError {
 public:
  using ControlError::ControlError;
};

}  // namespace levyctl
