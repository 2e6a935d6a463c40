#pragma once

#include <stdexcept>
#include <string>

namespace refract {

// Base class for everything thrown by this library, so callers can catch
// one type at the CLI boundary and map it to an exit code.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Input data fails a structural requirement (bad matrix, bad flag value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A function argument is outside its documented domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A caller violated an ordering or state requirement of the API.
class PreconditionViolated : public Error {
 public:
  using Error::Error;
};

// The model does not satisfy the standing assumptions of the method.
class AssumptionViolated : public Error {
 public:
  using Error::Error;
};

// (sI - T) is singular or numerically unusable at the requested point.
class SingularResolvent : public Error {
 public:
  using Error::Error;
};

// A bracketing or polishing root search failed to converge.
class NoRoot : public Error {
 public:
  using Error::Error;
};

// A scan for a sign change found none where one is required.
class NoBracket : public Error {
 public:
  using Error::Error;
};

// Two spectral roots collided within the separation threshold; the
// closed forms assume simple roots.
class RootMultiplicity : public Error {
 public:
  using Error::Error;
};

// The number of roots with negative real part disagrees with theory.
class CountMismatch : public Error {
 public:
  using Error::Error;
};

// A quantity that must be real carries a non-negligible imaginary part.
class ImaginaryResidue : public Error {
 public:
  using Error::Error;
};

// Exercise thresholds came out non-monotone.
class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

// Floating-point cancellation grew past the point where results are
// trustworthy; carries the stage and sub-step where it was detected.
class PrecisionBreakdown : public Error {
 public:
  PrecisionBreakdown(const std::string &msg, int stage, int substep)
      : Error(msg), stage_(stage), substep_(substep) {}
  int stage() const { return stage_; }
  int substep() const { return substep_; }

 private:
  int stage_;
  int substep_;
};

}  // namespace refract
