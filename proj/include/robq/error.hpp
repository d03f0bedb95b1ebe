#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace robq {

// Precondition violated by a caller-supplied value.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File or record content failed validation. `line` is 1-based, 0 when the
// failure is not tied to a single line.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Stratified fold assignment impossible (some class has fewer members than folds).
class StratificationError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// The witness perturbation does not exist (runner-up mass is zero).
class NoWitness : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

}  // namespace robq
