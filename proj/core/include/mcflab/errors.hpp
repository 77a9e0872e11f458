#pragma once

#include <stdexcept>
#include <string>

namespace mcflab {

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a simulation would exceed a configured memory or size bound.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a numerical scheme leaves its admissible range (NaN, blow-up).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mcflab
