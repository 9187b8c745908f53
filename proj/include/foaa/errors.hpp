#pragma once

#include <stdexcept>
#include <string>

namespace foaa {

// Base for every error raised by the library. The CLI maps each subclass to
// its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes that do not agree with an operation's contract.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Caller broke a precondition that is not about shapes (non-scalar loss,
// label out of range, mismatched optimizer state, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (empty operator set, n too small, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace foaa
