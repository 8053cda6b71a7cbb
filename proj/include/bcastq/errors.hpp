#pragma once

#include <stdexcept>
#include <string>

namespace bcastq {

/// Rejected user-level parameter (bad config value, violated invariant).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A steady-state quantity was requested for a parameter set with no
/// stationary regime.
class NonErgodic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Argument outside the domain of an evaluator (x = 0 pole, |x| > 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Iterative or numerical procedure failed its own accuracy check.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bcastq
