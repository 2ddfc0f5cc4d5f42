#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyponli {

// Malformed input file content. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        source_(source),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// Bad field maps, column specs, label schemes, synth specs and similar.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values in the forward or backward pass.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated shape or length contract between arguments.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace hyponli
