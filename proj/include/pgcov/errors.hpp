#pragma once

#include <stdexcept>
#include <string>

namespace pgcov {

// Malformed caller input: bad dimensions, out-of-range parameters,
// unparsable files. The CLI maps this to exit status 2.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not produce a usable answer (solver did not
// converge, degenerate residuals, singular covariance). CLI exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pgcov
