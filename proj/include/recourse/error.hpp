#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recourse {

// Base of every error raised by the library. Callers that only need a
// diagnostic can catch this and print what().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// scm-core
class CycleError : public Error { using Error::Error; };
class IncompleteTableError : public Error { using Error::Error; };
class DuplicateEquationError : public Error { using Error::Error; };
class MissingExogenousError : public Error { using Error::Error; };
class NonInvertibleError : public Error { using Error::Error; };
// Structural problems in an SCM description that none of the above cover
// (unknown names, equations on exogenous variables, arity mismatches).
class ScmSpecError : public Error { using Error::Error; };

// recourse-engine
class InvalidQueryError : public Error { using Error::Error; };

// game-models
class UnknownMatrixError : public Error { using Error::Error; };
class AsymmetricMatrixError : public Error { using Error::Error; };

// experiment-harness
class InvalidParamsError : public Error { using Error::Error; };

// Errors that may point into a text file. `line` is 1-based; 0 means the
// position is unknown or irrelevant.
class LocatedError : public Error {
 public:
  explicit LocatedError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A value outside its variable's declared domain.
class DomainError : public LocatedError { using LocatedError::LocatedError; };
class ParseError : public LocatedError { using LocatedError::LocatedError; };

}  // namespace recourse
