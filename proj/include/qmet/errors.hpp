#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "qmet/types.hpp"

namespace qmet {

// Invalid user input: bad scenario, mismatched dimensions, out-of-domain
// constants. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure on valid input. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& what, double eigenvalue)
      : NumericalError(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

// A Fisher matrix with a (numerical) null space: the parameter combination
// along null_vector() cannot be estimated.
class UnidentifiableError : public NumericalError {
 public:
  UnidentifiableError(const std::string& what, RVector null_vector, double condition)
      : NumericalError(what), null_vector_(std::move(null_vector)), condition_(condition) {}
  const RVector& null_vector() const { return null_vector_; }
  double condition() const { return condition_; }

 private:
  RVector null_vector_;
  double condition_;
};

class DegenerateSupportError : public NumericalError {
 public:
  DegenerateSupportError(const std::string& what, std::size_t outcome)
      : NumericalError(what), outcome_(outcome) {}
  std::size_t outcome() const { return outcome_; }

 private:
  std::size_t outcome_;
};

class InfeasiblePointError : public NumericalError {
 public:
  InfeasiblePointError(const std::string& what, std::size_t outcome)
      : NumericalError(what), outcome_(outcome) {}
  std::size_t outcome() const { return outcome_; }

 private:
  std::size_t outcome_;
};

class LineSearchError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qmet
