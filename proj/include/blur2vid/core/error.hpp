#pragma once

#include <stdexcept>
#include <string>

namespace blur2vid {

// Invalid user input: malformed configs, bad shapes, unreadable files.
// CLI maps this to exit code 1.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failure: non-finite values, diverged training.
// CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace blur2vid
