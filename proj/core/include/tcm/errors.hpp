#pragma once

#include <stdexcept>
#include <string>

namespace tcm {

// Base class for every error raised by the library. Each subclass maps to
// one process exit code in the CLI (see experiment.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid user input: a configuration field, an argument out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Two fields that must share a grid do not.
class GridMismatchError : public Error {
 public:
  GridMismatchError() : Error("fields live on different spectral grids") {}
};

// The viscosity law returned a value below its declared floor.
class ViscosityFloorError : public Error {
 public:
  ViscosityFloorError(double theta, double mu, double floor)
      : Error("viscosity law violated its lower bound: mu(" + std::to_string(theta) +
              ") = " + std::to_string(mu) + " < " + std::to_string(floor)),
        theta_(theta) {}
  double theta() const { return theta_; }

 private:
  double theta_;
};

// A NaN or Inf appeared in the state during time stepping.
class BlowUpError : public Error {
 public:
  explicit BlowUpError(double time)
      : Error("non-finite coefficient detected at t = " + std::to_string(time)), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// A functional radicand left its admissible band (eta/kappa bound violated).
class FunctionalError : public Error {
 public:
  using Error::Error;
};

// File system failure while reading or writing run artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

// Input series contains values that cannot be log-fitted.
class NonPositiveSeriesError : public Error {
 public:
  using Error::Error;
};

}  // namespace tcm
