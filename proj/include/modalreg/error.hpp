#pragma once

#include <stdexcept>
#include <string>

namespace modalreg {

//! Base class of every error thrown by the library. `code()` is a stable,
//! machine-readable identifier (used by the CLI on stderr).
class Error : public std::runtime_error
{
public:
  Error(std::string code, const std::string& what)
    : std::runtime_error(what)
    , code_(std::move(code))
  {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

class InvalidArgument : public Error
{
public:
  explicit InvalidArgument(const std::string& what)
    : Error("invalid_argument", what)
  {}
};

//! The marginal density at a query point is below the support floor.
class LowDensityError : public Error
{
public:
  LowDensityError(const std::string& what, std::string where)
    : Error("low_density", what)
    , where_(std::move(where))
  {}

  //! Human-readable rendering of the offending query point.
  const std::string& where() const noexcept { return where_; }

private:
  std::string where_;
};

//! |p_yy| too small to divide by (bifurcation or merge vicinity).
class DegenerateCurvatureError : public Error
{
public:
  explicit DegenerateCurvatureError(const std::string& what)
    : Error("degenerate_curvature", what)
  {}
};

class NoModeError : public Error
{
public:
  explicit NoModeError(const std::string& what)
    : Error("no_mode", what)
  {}
};

class UnreachableMassError : public Error
{
public:
  explicit UnreachableMassError(const std::string& what)
    : Error("unreachable_mass", what)
  {}
};

class SelectionFailure : public Error
{
public:
  explicit SelectionFailure(const std::string& what)
    : Error("selection_failure", what)
  {}
};

class Unsupported : public Error
{
public:
  explicit Unsupported(const std::string& what)
    : Error("unsupported", what)
  {}
};

//! Malformed input file. Row and column are 1-based; 0 means "not applicable".
class ParseError : public Error
{
public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
    : Error("parse_error", what)
    , row_(row)
    , column_(column)
  {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

private:
  std::size_t row_;
  std::size_t column_;
};

} // namespace modalreg
