#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mhe {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation
/// (negative distance, mismatched lengths, mixed plus modes, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not supported by the given function family
/// (inverse of a bounded function, tail bound of a tabulated function, ...).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A fixture id did not resolve or a configuration failed validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Constraints of an estimation window cannot be met under the declared box bounds.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Forward simulation produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t time_index)
      : Error(what), time_index_(time_index) {}
  std::size_t time_index() const noexcept { return time_index_; }

 private:
  std::size_t time_index_;
};

}  // namespace mhe
