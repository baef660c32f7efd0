#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reel {

/// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or configuration (CLI exit code 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain numeric input, e.g. a negative Arrhenius argument.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two fields or vectors that must share a grid or length do not.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or incompatible file (CLI exit code 2).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// dt exceeds the explicit-Euler budget of some channel.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or runaway values during a rollout or training (CLI exit code 3).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace reel
