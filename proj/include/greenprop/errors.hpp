#pragma once

#include <stdexcept>
#include <string>

namespace greenprop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-facing configuration (lattice size, norm exponent, config file...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Field dimensions do not match the lattice.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain (negative time, non-positive log input...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOrderError : public Error {
 public:
  using Error::Error;
};

/// Total density 1 + rho dropped to (or below) the vacuum floor.
class VacuumError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, quadrature failure and similar.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Physical and spectral halves of a state pair disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Inputs that make a requested ratio meaningless (0/0 style).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace greenprop
