#pragma once

#include <stdexcept>
#include <string>

namespace freqadv {

// Bad experiment wiring: unknown config keys, invalid source/target pairings,
// checkpoint/architecture mismatches. CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem or format failure; the message names the offending path.
// CLI exit code 3.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values where finite math is required (losses, gradients).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace freqadv
