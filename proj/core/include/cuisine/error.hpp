#pragma once

#include <stdexcept>
#include <string>

namespace cuisine {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented schema (JSONL/CSV/model/manifest files).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or invalid argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training failed: divergence, degenerate data, or exhausted retries.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace cuisine
