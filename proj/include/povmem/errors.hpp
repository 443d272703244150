#pragma once

#include <stdexcept>
#include <string>

namespace povmem {

// Base of every error the library throws. The CLI maps Error subclasses to
// exit code 3 and ConfigError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Grid too coarse or too small for the requested mode, mask or transform.
class SamplingError : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

// Field with (numerically) zero power where a structure is required.
class DegenerateField : public Error {
 public:
  using Error::Error;
};

// Analytic approximation requested outside its regime of validity.
class RegimeViolation : public Error {
 public:
  using Error::Error;
};

class NotOnSphere : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class SingularFrame : public Error {
 public:
  using Error::Error;
};

class FitFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace povmem
