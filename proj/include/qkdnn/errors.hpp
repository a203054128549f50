#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkdnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad cutoff, out-of-range protocol parameter, malformed hyperparameter.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate, failed eigen/sqrt, quadrature that missed tolerance.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// No density matrix satisfies the constraint set (to tolerance).
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

/// Linear SDP did not converge within its iteration cap.
class SubproblemFailure : public Error {
 public:
  SubproblemFailure(const std::string& what, double primal_residual, double dual_residual)
      : Error(what), primal_residual_(primal_residual), dual_residual_(dual_residual) {}
  double primal_residual() const noexcept { return primal_residual_; }
  double dual_residual() const noexcept { return dual_residual_; }

 private:
  double primal_residual_;
  double dual_residual_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class TrainingFailure : public Error {
 public:
  using Error::Error;
};

class ModelCorruption : public Error {
 public:
  using Error::Error;
};

}  // namespace qkdnn
