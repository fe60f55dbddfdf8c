#pragma once

#include <stdexcept>
#include <string>

namespace iptwmi {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument: bad correlation, rank-deficient design, mismatched dimensions.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Logistic fit diverged because the response is (quasi-)perfectly separated.
class SeparationError : public Error {
 public:
  using Error::Error;
};

// Estimation cannot proceed, e.g. an empty treatment arm.
class EstimationError : public Error {
 public:
  using Error::Error;
};

// A log contrast was requested at a boundary marginal mean.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A strategy could not produce an estimate for this dataset.
class StrategyFailure : public Error {
 public:
  using Error::Error;
};

// Malformed user input (CSV, JSON config, column roles).
class InputError : public Error {
 public:
  using Error::Error;
};

// Zero score on a treated state with positive probability.
class PositivityError : public Error {
 public:
  using Error::Error;
};

}  // namespace iptwmi
