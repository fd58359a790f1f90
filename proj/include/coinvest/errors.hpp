#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace coinvest {

/// Bad argument to a library call (out-of-range k, mismatched lengths, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input file does not match the declared bundle schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data violates an invariant that cannot be quarantined row by row.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two or more records on one side of a join share a key that the other side
/// also uses, so no unique match exists.
class AmbiguityError : public DataError {
 public:
  AmbiguityError(const std::string& message, std::vector<std::string> ids)
      : DataError(message), ids_(std::move(ids)) {}

  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

/// Iterative numerical routine failed to reach its tolerance.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& message, double residual)
      : std::runtime_error(message), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// A statistic is mathematically undefined for the given input (empty
/// average, zero variance, ...).
class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pipeline stage was invoked before the stage that produces its inputs.
class PrerequisiteError : public ConfigError {
 public:
  PrerequisiteError(const std::string& message, std::string prerequisite)
      : ConfigError(message), prerequisite_(std::move(prerequisite)) {}

  const std::string& prerequisite() const noexcept { return prerequisite_; }

 private:
  std::string prerequisite_;
};

}  // namespace coinvest
