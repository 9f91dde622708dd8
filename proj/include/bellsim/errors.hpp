#pragma once

#include <stdexcept>
#include <string>

namespace bellsim {

// Malformed input file or stream. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

// A value violates a documented precondition or type invariant.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Problem size exceeds a documented guard.
class ResourceError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A computed verdict failed its own post-verification.
class VerificationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Pipeline configuration rejected before any work started.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace bellsim
