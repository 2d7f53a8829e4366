#pragma once

#include <stdexcept>
#include <string>

namespace elab {

/// Base of every error raised by the library. The CLI maps each kind to an
/// exit status (see `exit_status`).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the admissible set of an operation (s <= 0, rho >= R, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Quadrature or bisection that failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A structural hypothesis on F, a or H does not hold at some sample.
class HypothesisViolation : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil is not available at the requested node.
class StencilError : public Error {
 public:
  using Error::Error;
};

class PositivityError : public Error {
 public:
  using Error::Error;
};

/// A manufactured target left (0, M].
class RangeError : public Error {
 public:
  using Error::Error;
};

/// The forward integrator left (0, M(1+1e-6)].
class BlowUpError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elab
