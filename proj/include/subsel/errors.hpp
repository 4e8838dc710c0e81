#pragma once

#include <stdexcept>
#include <string>

namespace subsel {

// Three failure categories; the CLI maps them to exit codes 2, 3 and 4.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// core
struct ConstantColumn : ConfigError {
  explicit ConstantColumn(long j)
      : ConfigError("column " + std::to_string(j) + " has zero variance"), column(j) {}
  long column;
};
struct NonFiniteValue : InputError {
  using InputError::InputError;
};

// losses
struct InvalidLabel : ConfigError {
  using ConfigError::ConfigError;
};
struct DomainBoundary : GuardError {
  using GuardError::GuardError;
};

// saddle / solver
struct IndexOutOfRange : GuardError {
  using GuardError::GuardError;
};
struct DimensionMismatch : GuardError {
  using GuardError::GuardError;
};
struct NotOLS : ConfigError {
  NotOLS() : ConfigError("operation requires every response coordinate to use the ols loss") {}
};
struct InfeasibleBudget : ConfigError {
  using ConfigError::ConfigError;
};

// embeddings
struct TooFewSamples : InputError {
  using InputError::InputError;
};
struct NonPositiveBandwidth : ConfigError {
  NonPositiveBandwidth() : ConfigError("kde bandwidth must be positive") {}
};
struct GridMismatch : GuardError {
  GridMismatch() : GuardError("quantile curves are defined on different level grids") {}
};
struct AsymmetricAdjacency : InputError {
  using InputError::InputError;
};

// simulation / oracle
struct ShapeMismatch : GuardError {
  using GuardError::GuardError;
};
struct TooLarge : GuardError {
  using GuardError::GuardError;
};

}  // namespace subsel
