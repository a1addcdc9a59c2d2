#pragma once

#include <stdexcept>
#include <string>

namespace cvqkd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariance matrix violates the uncertainty relation (or is not positive definite).
class NonPhysicalState : public Error {
 public:
  using Error::Error;
};

/// An iterative or special-function routine left its validated regime.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mode or quadrature index out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid scenario configuration or coefficient table.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// Logic error detected at run time, e.g. a Holevo quantity below the roundoff guard.
class InternalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cvqkd
