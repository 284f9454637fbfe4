#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mibci {

// Base of every error the library throws. The CLI maps ValidationError
// subclasses to exit code 1 and NumericalError subclasses to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or parameters (band edges, empty catalog, fold counts...).
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Input data does not satisfy an operation's precondition.
class DataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Malformed file content. `line` is 1-based for text formats; for binary
// formats it is 0 and `offset` carries the byte offset.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t offset = 0)
      : ValidationError(what), line_(line), offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t offset_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Composite covariance is singular even after regularization.
class ConditioningError : public NumericalError {
 public:
  ConditioningError(const std::string& what, double smallest_eigenvalue)
      : NumericalError(what), smallest_eigenvalue_(smallest_eigenvalue) {}
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }

 private:
  double smallest_eigenvalue_;
};

// SVM solver hit its iteration cap.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double duality_gap)
      : NumericalError(what), duality_gap_(duality_gap) {}
  double duality_gap() const noexcept { return duality_gap_; }

 private:
  double duality_gap_;
};

}  // namespace mibci
