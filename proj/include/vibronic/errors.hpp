#pragma once

#include <stdexcept>
#include <string>

namespace vibronic {

// Invalid configuration or arguments supplied by a caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The time integrator could not meet its tolerances (step underflow,
// step budget exhausted, norm/trace drift, positivity loss).
class IntegratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observables changed by more than the audit tolerance when the Fock
// cutoff was extended.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vibronic
