#pragma once

#include <stdexcept>
#include <string>

namespace fdsgp {

// Malformed, missing, or ill-posed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A factorization or other numerical routine could not complete.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lookup of an unknown model, sampler, or kernel name.
class NotFoundError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fdsgp
