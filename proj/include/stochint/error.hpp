#pragma once

#include <stdexcept>
#include <string>

namespace stochint {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A point, interval or time lies outside the set the operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Ensembles (or drivers, solutions) built on different probability spaces were combined.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

// Caller-side precondition violated (e.g. |c_k| > 1, missing derivative).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Model parameter outside its admissible range (e.g. Hurst index).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Grid size or alignment problem (non power-of-two sizes, unaligned times).
class GridError : public Error {
 public:
  using Error::Error;
};

// Requested work exceeds a hard budget (cell counts, subset enumeration).
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Input ensemble contains NaN or infinite samples.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A quadrature grid does not cover the support a kernel application needs.
class CoverageError : public Error {
 public:
  using Error::Error;
};

// One side of an identity check could not be accepted by its convergence report.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace stochint
