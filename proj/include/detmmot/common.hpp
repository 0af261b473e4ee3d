#pragma once

#include <stdexcept>
#include <string>

namespace detmmot {

// Violated precondition or malformed argument. The CLI maps this to exit 2.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerically degenerate input: rank-deficient frame, empty complement, ...
class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation that needs atomless radial marginals received an atomic one.
class AtomicMarginalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds the desk-scale resource guard. CLI exit 4.
class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invariant broken by our own computation (solver bug, inconsistent report).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace detmmot
