#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wpart {

// Error hierarchy. Each kind maps onto one CLI exit code (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or config value.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// An operation's precondition does not hold (bad shape, negative potential, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured budget.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& what, std::uint64_t required)
      : Error(what), required_(required) {}
  std::uint64_t required() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

/// An iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A post-condition or internal invariant was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

inline int exit_code(const Error& e) {
  if (dynamic_cast<const FormatError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  if (dynamic_cast<const BudgetError*>(&e)) return 4;
  return 5;
}

}  // namespace wpart
