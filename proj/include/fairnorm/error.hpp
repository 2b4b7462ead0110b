#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairnorm {

/// Operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration or argument values.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data. Carries the offending line when known.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A dense verification routine was asked to exceed its size cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace fairnorm
