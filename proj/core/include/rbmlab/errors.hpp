// Error hierarchy shared by every module. The CLI maps each family to an
// exit code: validation 2, numerical 3, capacity 4.
#pragma once

#include <stdexcept>
#include <string>

namespace rbm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, shapes, priors or configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Solver failure, divergence, non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Requested problem does not fit the memory or enumeration budget.
class CapacityError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

}  // namespace rbm
