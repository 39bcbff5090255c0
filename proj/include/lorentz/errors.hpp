#pragma once

#include <stdexcept>
#include <string>

namespace lorentz {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid textual input (expressions, configs, CSV). Carries a 1-based position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// An operation was called with inputs violating its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// The metric is not of signature (1,1) (or (2,1) for 3x3 forms) where required.
class SignatureError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Evaluation outside a non-periodic domain.
class DomainError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

}  // namespace lorentz
