#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ramify {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or a value type invariant was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A cost evaluation hit a configuration where the functional is not finite,
/// e.g. zero mollified flux at a point that carries mass.
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

/// The analytic gradient is undefined at the current configuration.
class NonDifferentiable : public Error {
 public:
  NonDifferentiable(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Path plan cannot be represented as a rooted tree at the requested tolerance.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ramify
