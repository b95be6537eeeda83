#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twolevel {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or argument violates a documented invariant. field() names it.
class DomainError : public Error {
 public:
  DomainError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A closed form was requested outside the regime where it is defined.
class RegimeError : public Error {
 public:
  using Error::Error;
};

// An experiment was configured for a regime the parameters do not satisfy.
class RegimeMismatch : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  NoConvergence(int iterations, double residual)
      : Error("no convergence after " + std::to_string(iterations) +
              " iterations (last residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}
  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  TooLarge(std::size_t size, std::size_t cap)
      : Error("state space of size " + std::to_string(size) + " exceeds cap " +
              std::to_string(cap)),
        size_(size) {}
  std::size_t size() const noexcept { return size_; }

 private:
  std::size_t size_;
};

class NotIrreducible : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

}  // namespace twolevel
