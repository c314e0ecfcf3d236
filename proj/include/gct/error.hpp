#pragma once

#include <stdexcept>
#include <string>

namespace gct {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or other floating point failures.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the domain of a formula (poles, inside the bulk, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped before meeting its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Kernel outside the class a procedure was derived for.
class UnsupportedKernel : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gct
