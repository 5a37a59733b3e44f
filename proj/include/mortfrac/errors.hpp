#pragma once

#include <stdexcept>
#include <string>

namespace mortfrac {

/// Argument outside the domain of a formula (H outside (0,1), negative time, b <= a, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed: quadrature did not converge, a Cholesky pivot went
/// negative, an exponent would overflow, a root could not be bracketed.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or table.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few samples / observations for the requested statistic.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside the physical-measure estimation pipeline, tagged by step.
class EstimationError : public std::runtime_error {
 public:
  EstimationError(std::string step, const std::string& what)
      : std::runtime_error(step + ": " + what), step_(std::move(step)) {}
  const std::string& step() const noexcept { return step_; }

 private:
  std::string step_;
};

}  // namespace mortfrac
