#pragma once

#include <stdexcept>
#include <string>

namespace hofilt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed formula text. `position` is a 0-based byte offset.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& what)
      : Error("syntax error at position " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownVariable : public Error {
 public:
  UnknownVariable(const std::string& name, int dim)
      : Error("unknown variable '" + name + "' (state dimension is " + std::to_string(dim) + ")") {}
};

class NonIntegerExponent : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

class OrderTooHigh : public Error {
 public:
  using Error::Error;
};

class MissingBound : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class InadmissibleMesh : public Error {
 public:
  InadmissibleMesh(double delta, double delta0)
      : Error("inadmissible mesh: delta=" + std::to_string(delta) +
              " is not below delta0=" + std::to_string(delta0)),
        delta_(delta),
        delta0_(delta0) {}
  double delta() const noexcept { return delta_; }
  double delta0() const noexcept { return delta0_; }

 private:
  double delta_;
  double delta0_;
};

/// Overflowing log-weights and similar numerical breakdowns.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotLinear : public Error {
 public:
  using Error::Error;
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class NonPositiveError : public Error {
 public:
  using Error::Error;
};

/// Invalid model or run configuration (bad JSON, missing fields, limits exceeded).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace hofilt
