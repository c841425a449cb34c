#pragma once

#include <stdexcept>
#include <string>

namespace quasivar {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (non-finite input,
/// negative tolerance, invalid exponents).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the tabulated range of a transform.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Quadrature or iteration failed to reach the requested accuracy.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, double achieved = 0.0)
      : Error(what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// Construction of a transform or discretization failed a self-check.
class BuildError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Mountain-pass geometry absent (path collapse or endpoint above zero).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Invalid command-line or file configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace quasivar
