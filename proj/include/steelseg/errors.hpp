#pragma once

#include <stdexcept>
#include <string>

namespace steelseg {

// Invalid arguments or inconsistent inputs (caller bug / bad usage).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with external data: missing files, malformed CSV/RLE, bad checkpoints.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace steelseg
