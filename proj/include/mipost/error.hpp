#pragma once

#include <stdexcept>
#include <string>

namespace mipost {

/// Malformed input text: ragged rows, unparseable JSON, wrong nesting.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Well-formed input whose values break a table or prior invariant.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a numeric routine.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// An operation that needs every posterior cell positive met a zero cell.
class ZeroCellError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Leading-order variance vanishes, so shape statistics are undefined.
class DegenerateError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Iterative solver ran out of budget.
class ConvergenceError : public std::runtime_error {
public:
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

private:
  double best_residual_;
};

}  // namespace mipost
