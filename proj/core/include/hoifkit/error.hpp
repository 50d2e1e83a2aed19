#pragma once

#include <stdexcept>
#include <string>

namespace hoifkit {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or unsupported configuration. The message names the violated constraint.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input point outside [0,1]^d.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, long index) : Error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Gram factorization failed or the operator is numerically singular.
class SingularGramError : public NumericalError {
 public:
  SingularGramError(const std::string& what, double lambda_min)
      : NumericalError(what), lambda_min_(lambda_min) {}
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  double lambda_min_;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// A quantity is degenerate (zero standard error, negative radius, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// The KBW aggregate directions carry no signal (singular Omega_f).
class DegenerateAggregateError : public DegenerateError {
 public:
  using DegenerateError::DegenerateError;
};

/// No sub-cube holds two or more points.
class EmptyDesignError : public Error {
 public:
  using Error::Error;
};

/// An oracle-only operation was called without simulation truth.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Requested work exceeds a documented computational budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace hoifkit
