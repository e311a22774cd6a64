#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rmst {

// Invalid arguments or configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Failures of a numerical procedure on valid input (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A jump transform whose score gives the exact observation zero weight in every
// admissible configuration.
class DegenerateScoreError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, std::vector<double> residuals)
      : NumericalError(what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

class InfeasibleMomentsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rmst
