#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace replidyn {

// Base for every error raised by the library. Callers that only care about
// "library failed" catch this; the subclasses below name the failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operation needs an interior point (or finite input) and did not get one.
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed value object: weights not on the simplex, tangent vector not
// summing to zero, likelihood outside [0,1], and so on.
class InvariantError : public Error {
 public:
  using Error::Error;
};

class InfiniteDivergenceError : public Error {
 public:
  using Error::Error;
};

class NonpositiveMeanFitnessError : public Error {
 public:
  using Error::Error;
};

class NegativeFrequencyError : public Error {
 public:
  NegativeFrequencyError(std::size_t type_index, const std::string& what)
      : Error(what), type_index_(type_index) {}
  std::size_t type_index() const noexcept { return type_index_; }

 private:
  std::size_t type_index_;
};

// Wraps an error raised at a given iteration of a discrete orbit or of a
// sequential inference run.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what) : Error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class StiffnessError : public Error {
 public:
  StiffnessError(double time, const std::string& what) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class ImpossibleEvidenceError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class NoIsolatedEquilibriumError : public Error {
 public:
  using Error::Error;
};

class NoInteriorEquilibriumError : public Error {
 public:
  using Error::Error;
};

class RadiusError : public Error {
 public:
  using Error::Error;
};

class UnsupportedLandscapeError : public Error {
 public:
  using Error::Error;
};

// Postcondition check on a numerical result failed (e.g. the normalizer
// rate identity along an exponential-coordinate run).
class NumericsError : public Error {
 public:
  using Error::Error;
};

}  // namespace replidyn
