#pragma once

#include <stdexcept>
#include <string>

namespace g2flow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (bad grid, mismatched fields, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: a singular set or degenerate configuration was hit.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Adaptive integrator proposed a step below StepControl::dt_min.
class StepSizeUnderflow : public NumericalError {
 public:
  StepSizeUnderflow(double t_last, double dt)
      : NumericalError("step size underflow at t=" + std::to_string(t_last) +
                       " (dt=" + std::to_string(dt) + ")"),
        t_last_(t_last) {}
  /// Time of the last accepted step.
  double t_last() const noexcept { return t_last_; }

 private:
  double t_last_;
};

class MaxStepsExceeded : public NumericalError {
 public:
  explicit MaxStepsExceeded(double t_last)
      : NumericalError("maximum number of steps exceeded at t=" +
                       std::to_string(t_last)),
        t_last_(t_last) {}
  double t_last() const noexcept { return t_last_; }

 private:
  double t_last_;
};

class ZeroConformalFactor : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A reconstruction precondition field (alpha, beta, alpha+beta, h') vanishes.
class DegenerateTorsion : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NegativeRadicand : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoBranchMatched : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// |alpha + beta| (or another divisor) underflowed its threshold.
class SingularDenominator : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotCoClosed : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The nearly-Kaehler soliton system degenerates to constraints where l = 0.
class SingularAtLZero : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BeyondBlowUp : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace g2flow
