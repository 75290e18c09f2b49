#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cas {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when structured text (problem files, alias tables, dataset
/// records, action scripts) cannot be parsed. Carries a 1-based line and
/// column of the offending token where known (0 = unknown).
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t line = 0, std::size_t col = 0)
      : Error(format(msg, line, col)), line_(line), col_(col) {}

  std::size_t line() const { return line_; }
  std::size_t col() const { return col_; }

private:
  static std::string format(const std::string& msg, std::size_t line, std::size_t col) {
    if (line == 0) return msg;
    std::string s = "line " + std::to_string(line);
    if (col != 0) s += ", col " + std::to_string(col);
    return s + ": " + msg;
  }

  std::size_t line_;
  std::size_t col_;
};

/// Raised when parsed input is well-formed but violates a documented
/// invariant. The message names the violated invariant.
class ValidationError : public Error {
public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

}  // namespace cas
