#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace p2law {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Input outside a law's domain (d <= 0, rho outside (0,1), ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A law produced a non-finite value or an exponent would overflow.
class EvaluationError : public Error {
public:
  using Error::Error;
};

/// Malformed curve file, parameter file or config file.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : what + " at line " + std::to_string(line)), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Structural invariant violated by otherwise well-formed data.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Fitting could not produce a result.
class FitError : public Error {
public:
  using Error::Error;
};

}  // namespace p2law
