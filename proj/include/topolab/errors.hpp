#pragma once

#include <stdexcept>
#include <string>

namespace topolab {

// Bad index, out-of-range argument or malformed input value.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration or file content failed validation (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The kernel's Riemann sum vanishes, so the transition probabilities
// cannot be normalized.
class DegenerateNormalization : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverInstability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant of a simulator was broken; always a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace topolab
