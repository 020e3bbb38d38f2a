#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace skrock {

// Exception hierarchy used throughout the C++ core. The C API maps each
// class onto one skr_status code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration field was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A Markov chain produced a non-finite state.
class PoisonedChain : public Error {
 public:
  PoisonedChain(const std::string& what, std::int64_t iteration = -1)
      : Error(iteration >= 0 ? what + " (iteration " + std::to_string(iteration) + ")" : what),
        iteration_(iteration) {}

  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

/// A linear recursion with |R1(z)| >= 1 was asked for a stationary quantity.
class Divergence : public Error {
 public:
  using Error::Error;
};

/// The requested accuracy lies below the asymptotic bias floor.
class Unreachable : public Error {
 public:
  using Error::Error;
};

/// Two chains were compared at different gradient budgets.
class BudgetMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace skrock
