#pragma once

#include <stdexcept>
#include <string>

namespace pll {

// Malformed or truncated on-disk data.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or inputs that violate an operation's preconditions.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or degenerate geometry (zero vectors) encountered while computing.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between arguments.
class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pll
