#pragma once

#include <stdexcept>

namespace adatrack {

/// Rejected input: malformed boxes, mismatched sequences, bad dimensions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or inconsistent input data (images, annotation files).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested region no longer overlaps the frame.
class LostTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace adatrack
