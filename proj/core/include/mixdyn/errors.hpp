#pragma once

#include <stdexcept>
#include <string>

namespace mixdyn {

// Bad user input: unknown system, invalid parameter, malformed config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A box or edge count would exceed the configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite map values, failed Newton solves, singular formulas.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mixdyn
