#pragma once

#include <stdexcept>
#include <string>

namespace channelion {

/// Root of every error thrown by the library. The CLI maps the two
/// families below onto process exit codes (2 for configuration, 3 for
/// numerical failures).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad config keys, out-of-range parameters,
/// malformed records.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A computation produced non-finite values, failed to converge or hit
/// a degenerate model.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Matrix handed to a state-level operation is not a valid quantum state.
class StateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace channelion
