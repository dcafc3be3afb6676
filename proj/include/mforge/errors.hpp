#pragma once

#include <stdexcept>
#include <string>

namespace mforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

#define MFORGE_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &what) : Error(#Name ": " + what) {}       \
  }

MFORGE_DEFINE_ERROR(MismatchedLengths);
MFORGE_DEFINE_ERROR(RootFindFailure);
MFORGE_DEFINE_ERROR(OutOfDomain);
MFORGE_DEFINE_ERROR(SingularGram);
MFORGE_DEFINE_ERROR(Infeasible);
MFORGE_DEFINE_ERROR(SolverDivergence);
MFORGE_DEFINE_ERROR(DegenerateJacobian);
MFORGE_DEFINE_ERROR(SingularMatrix);
MFORGE_DEFINE_ERROR(ValidationError);

#undef MFORGE_DEFINE_ERROR

/// Scenario syntax error with the 1-based source position.
class ParseError : public Error {
public:
  ParseError(const std::string &what, int line, int column)
      : Error("ParseError at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + what),
        line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

} // namespace mforge
