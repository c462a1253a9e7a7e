#pragma once

#include <stdexcept>
#include <string>

namespace igabem {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameter or coordinate outside its admissible range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Kernel evaluated at coincident source and field points.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent geometry or model data (open boundary, degenerate map, ...).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Linear system could not be solved.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Model text could not be parsed. Carries 1-based line/column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace igabem
