#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rcgrid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or shapes supplied by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Equality constraints do not intersect the probability simplex.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double gap) : Error(what), gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double kkt_residual, int iterations)
      : Error(what), kkt_residual_(kkt_residual), iterations_(iterations) {}
  double kkt_residual() const noexcept { return kkt_residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double kkt_residual_;
  int iterations_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rcgrid
