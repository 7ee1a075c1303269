#pragma once

#include <stdexcept>
#include <string>

namespace listflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Initial data would place a minimal hypersphere on the grid (f above the
/// configured cap).
class MinimalSphereError : public Error {
 public:
  using Error::Error;
};

/// Not enough tail nodes for a decay-law or mass extrapolation fit.
class InsufficientTail : public Error {
 public:
  using Error::Error;
};

}  // namespace listflow
