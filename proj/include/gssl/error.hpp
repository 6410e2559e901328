#pragma once

#include <stdexcept>
#include <string>

namespace gssl {

// Malformed or missing input files (exit code 1).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : InputError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Invalid run configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Validator backend failures; retriable at the transport level (exit code 2).
class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values in training or gradients (exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gssl
