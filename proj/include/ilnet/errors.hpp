#pragma once

#include <stdexcept>
#include <string>

namespace ilnet {

/// Array shapes that do not fit the operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside its documented domain (index out of range and similar).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An object used in the wrong lifecycle state, e.g. a tape replayed twice.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Input data that violates a documented precondition.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file content; the message carries line and field context.
class ParseError : public DataError {
 public:
  using DataError::DataError;
};

/// File or checkpoint written by an incompatible format or model version.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unknown configuration keys and values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values produced during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ilnet
