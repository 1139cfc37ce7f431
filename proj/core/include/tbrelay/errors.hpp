#pragma once

#include <stdexcept>
#include <string>

namespace tbrelay {

// Errors are split into two families so front ends can map them onto exit
// codes: ConfigError for bad input, NumericError for failures of the
// simulation itself (truncation, non-convergence).

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaViolation : public ConfigError {
 public:
  SchemaViolation(std::string key, const std::string& what)
      : ConfigError("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class DimensionMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class RegistryMismatch : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnregisteredMode : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BinOverflow : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnnormalizedState : public NumericError {
 public:
  using NumericError::NumericError;
};

class TruncationOverflow : public NumericError {
 public:
  using NumericError::NumericError;
};

class TailMassTooLarge : public NumericError {
 public:
  using NumericError::NumericError;
};

class NonConvergence : public NumericError {
 public:
  using NumericError::NumericError;
};

class InsufficientPoints : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace tbrelay
