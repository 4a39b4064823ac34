#pragma once

#include <stdexcept>
#include <string>

namespace digirap {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when time stepping cannot proceed (step underflow, non-finite
/// amplitudes, norm blow-up). The message carries the time and state norm.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A population ratio whose denominator vanishes.
class UndefinedRatio : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace detail
}  // namespace digirap
