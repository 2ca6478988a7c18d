#pragma once

#include <stdexcept>
#include <string>

namespace bergman {

// A point where the integrand or a kernel could not be evaluated to a finite value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a kernel or a space (|x| >= 1, t <= 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A series that does not converge at the requested point.
class DivergentSeriesError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Parameters violate the hypothesis of the statement being evaluated. The
// message names the violated inequality.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace bergman
