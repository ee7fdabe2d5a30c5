#pragma once

#include <stdexcept>
#include <string>

namespace olab {

// Invalid user input: malformed configs, out-of-range parameters, bad
// construction arguments. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine could not deliver its contract (singular pivot,
// non-convergence, failure-rate breach). The CLI maps this to exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace olab
