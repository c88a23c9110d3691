#pragma once

#include <stdexcept>
#include <string>

namespace ccgl {

/// Base class for all failures raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Graph bundle that is missing, unreadable, or violates an invariant.
class BundleError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf produced somewhere, or a degenerate numerical state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch or misuse of an API precondition.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccgl
