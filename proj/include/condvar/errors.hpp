#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace condvar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument: non-positive lengthscale, dimension mismatch, n != 2p, ...
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A constructed covariance failed its positive-definiteness check.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

// Input outside what an algorithm supports, e.g. an asymmetric circulant row.
class UnsupportedInputError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t iteration)
      : Error(what), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace condvar
