#pragma once

#include <stdexcept>
#include <string>

namespace stratlabor {

// Root of the library's exception hierarchy. Every failure the library
// reports on purpose derives from this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A function was evaluated to a non-finite value, or an argument lies
// outside the domain where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Quadrature (or another iterative method) could not reach its target
// accuracy. The best available estimate travels with the exception.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

// Invalid scenario configuration. `key()` names the offending setting.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// A value lies outside the range of a (monotone) map that is being inverted.
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double attainable_lo, double attainable_hi)
      : Error(what), lo_(attainable_lo), hi_(attainable_hi) {}

  double attainable_lo() const noexcept { return lo_; }
  double attainable_hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// The worker's objective is locally flat at its optimum, so the implicit
// function theorem gives no derivative.
class DegenerateResponseError : public Error {
 public:
  using Error::Error;
};

// A stochastic estimate could not be formed (e.g. every sample degenerate).
class EstimationError : public Error {
 public:
  using Error::Error;
};

// The marginal signal density vanishes, so a posterior given the signal is undefined.
class UndefinedSignalError : public Error {
 public:
  using Error::Error;
};

}  // namespace stratlabor
