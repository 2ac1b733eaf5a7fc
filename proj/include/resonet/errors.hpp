#pragma once

#include <stdexcept>
#include <string>

namespace resonet {

/// Malformed or inconsistent user input (graph specs, CSV traces, CLI values).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Syntax error in a line-oriented input file; carries the 1-based line number.
class ParseError : public InputError {
public:
  ParseError(std::size_t line, const std::string &what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Singular systems, non-convergent iterations, non-removable singularities.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace resonet
