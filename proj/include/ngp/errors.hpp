#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ngp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Requested derivative order is not provided by a kernel family.
class OrderOutOfRange : public Error {
 public:
  using Error::Error;
};

/// Kernel evaluated outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

class UnknownLabel : public Error {
 public:
  explicit UnknownLabel(const std::string& label)
      : Error("unknown label '" + label + "'"), label_(label) {}
  const std::string& label() const noexcept { return label_; }

 private:
  std::string label_;
};

/// Cholesky factorization failed even after the largest allowed jitter.
class FactorizationFailure : public Error {
 public:
  explicit FactorizationFailure(double jitter)
      : Error("covariance not positive definite after jitter " + std::to_string(jitter)),
        jitter_(jitter) {}
  double jitter() const noexcept { return jitter_; }

 private:
  double jitter_;
};

class TrainingFailure : public Error {
 public:
  using Error::Error;
};

class StateMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedTableau : public Error {
 public:
  using Error::Error;
};

class NoClosedForm : public Error {
 public:
  using Error::Error;
};

class OracleFailure : public Error {
 public:
  using Error::Error;
};

class UndefinedNorm : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure raised while advancing the solver by one time step.
class StepFailure : public Error {
 public:
  StepFailure(int step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace ngp
