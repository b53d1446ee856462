#pragma once

#include <stdexcept>
#include <string>

namespace ergodic {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad expression, bad config field, violated type invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A valid request the mathematics refuses, e.g. deriving a transform for a
/// dynamic that fails the ergodicity condition.
class DomainRefusal : public Error {
 public:
  using Error::Error;
};

/// NaN propagation, quadrature failure, values outside a transform's domain.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Caller broke a documented precondition (grid mismatch, ordering, sizes).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergodic
