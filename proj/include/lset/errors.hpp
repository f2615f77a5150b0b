#pragma once

#include <stdexcept>
#include <string>

namespace lset {

/// Bad argument or violated precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve or factorization failed after jitter escalation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A quadratic form was requested for a direction outside range(A).
class RankDeficiency : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Too few samples for the robust estimator's confidence level.
class InsufficientSamples : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Some gap is exactly zero, so the oracle objective is unbounded.
class DegenerateInstance : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// The sampling oracle has no budget left.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration; `what()` carries the field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lset
