#pragma once

#include <stdexcept>
#include <string>

namespace hkflow {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
 public:
  explicit GridMismatch(const std::string& where)
      : Error("grid mismatch in " + where) {}
};

class InvalidField : public Error {
 public:
  using Error::Error;
};

/// A symmetric tensor field failed the pointwise positivity test.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(double min_eig)
      : Error("tensor field is not positive definite (min eigenvalue " +
              std::to_string(min_eig) + ")"),
        min_eig_(min_eig) {}
  double min_eig() const { return min_eig_; }

 private:
  double min_eig_;
};

class StepRejected : public Error {
 public:
  enum class Reason { NotPositiveDefinite, StabilityGuard, LinearSolve };
  StepRejected(Reason reason, const std::string& what, double min_eig = 0.0)
      : Error("step rejected: " + what), reason_(reason), min_eig_(min_eig) {}
  Reason reason() const { return reason_; }
  double min_eig() const { return min_eig_; }

 private:
  Reason reason_;
  double min_eig_;
};

class LinearSolveFailed : public Error {
 public:
  LinearSolveFailed(double residual, int iters)
      : Error("linear solve failed: residual " + std::to_string(residual) +
              " after " + std::to_string(iters) + " iterations"),
        residual_(residual),
        iters_(iters) {}
  double residual() const { return residual_; }
  int iters() const { return iters_; }

 private:
  double residual_;
  int iters_;
};

class NewtonDiverged : public Error {
 public:
  NewtonDiverged(int iterations, double residual)
      : Error("Newton iteration did not converge: residual " +
              std::to_string(residual) + " after " +
              std::to_string(iterations) + " iterations"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class LineSearchFailed : public Error {
 public:
  LineSearchFailed(int iteration, double residual)
      : Error("line search failed at Newton iteration " +
              std::to_string(iteration) + " (residual " +
              std::to_string(residual) + ")") {}
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class NonPositiveOrdinate : public Error {
 public:
  using Error::Error;
};

class StateMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyHistory : public Error {
 public:
  EmptyHistory() : Error("diagnostic history is empty") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  ParseError(int line, const std::string& message)
      : ConfigError("parse error at line " + std::to_string(line) + ": " +
                    message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public ConfigError {
 public:
  ValidationError(const std::string& field, const std::string& reason)
      : ConfigError("invalid " + field + ": " + reason), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& expected, const std::string& found)
      : Error("snapshot format error: expected " + expected + ", found " +
              found) {}
};

}  // namespace hkflow
