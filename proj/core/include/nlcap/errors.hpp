#pragma once

#include <stdexcept>
#include <string>

namespace nlcap {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor dimensions or index ranges are inconsistent.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Values violate a structural requirement (negative probability, bad
// normalization, non-unit vector, out-of-range parameter).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The box violates the nonsignaling conditions beyond tolerance.
class SignalingError : public Error {
 public:
  SignalingError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// A marginal target is positive on a slice that carries no mass.
class SupportError : public Error {
 public:
  using Error::Error;
};

// nS^nB exceeds the configured sequence-space cap.
class CapacityLimitError : public Error {
 public:
  using Error::Error;
};

// An iterative method ran out of iterations. `last_residual` is the last
// convergence certificate the method computed (a gap or a residual).
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// Malformed input file content.
class ParseError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlcap
