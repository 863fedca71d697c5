#pragma once

#include <stdexcept>
#include <string>

namespace rlqt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent matrix or vector dimensions at an API boundary.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel failed: non-convergence, singular subproblem, non-finite data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Riccati equation has no stabilizing (or no admissible) solution.
class RiccatiError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A design stage could not produce an admissible result.
class SynthesisError : public Error {
 public:
  SynthesisError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Malformed or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A simulation produced non-finite values.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace rlqt
