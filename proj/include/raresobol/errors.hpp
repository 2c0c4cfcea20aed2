#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace raresobol {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Requested object would be too large to represent.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing or corrupt file. The message names the file.
class IoError : public Error {
 public:
  using Error::Error;
};

// Base for failures of a numerical method on valid input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// All QoI samples of a subset-simulation level tie across the quantile cut.
class DegenerateLevelError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Zero output variance; variance-based indices are undefined.
class UndefinedIndicesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Too few usable samples to identify the regression model.
class UnderdeterminedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class LinearSolverError : public NumericalError {
 public:
  LinearSolverError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Iterative solver hit its iteration cap. Carries the best iterate found.
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> best,
                      double gap)
      : NumericalError(what), best_(std::move(best)), gap_(gap) {}
  const std::vector<double>& best_iterate() const noexcept { return best_; }
  double duality_gap() const noexcept { return gap_; }

 private:
  std::vector<double> best_;
  double gap_;
};

}  // namespace raresobol
