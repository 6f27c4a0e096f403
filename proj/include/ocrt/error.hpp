#pragma once

#include <stdexcept>
#include <string>

namespace ocrt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The constraint system admits no point (or no point of the requested form).
class InfeasibleSetError : public Error {
 public:
  using Error::Error;
};

/// The requested (loss, feasible set, method) combination is not handled.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument lies outside the domain of the function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration, recipe or file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ocrt
