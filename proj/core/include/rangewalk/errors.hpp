#pragma once

#include <stdexcept>
#include <string>

namespace rangewalk {

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 2,
// IoError -> 3, everything else raised mid-run -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested object exceeds the configured memory budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// The safe (pre-guard) region of a finite-horizon environment is too small
// for the requested computation.
class HorizonError : public Error {
 public:
  using Error::Error;
};

// A ball grew to cover the whole generated graph; its complement is empty.
class BallCoversGraphError : public Error {
 public:
  using Error::Error;
};

// Fewer exact cut-times than the operation requires (expected outcome for
// two-sided d=4 inputs).
class InsufficientCutsError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

// A runtime invariant check failed (mass conservation, censoring budget, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rangewalk
