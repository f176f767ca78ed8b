#pragma once

#include <stdexcept>
#include <string>

namespace jellium {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or a configuration value does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Adaptive refinement or series truncation stopped before reaching the
/// requested tolerance. `achieved()` is the best estimate that was reached.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(what + " (achieved tolerance " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// An orthonormalization produced a Gram matrix too far from the identity.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A sampler detected a violated envelope or a negative conditional density.
class SamplerError : public Error {
 public:
  using Error::Error;
};

}  // namespace jellium
