#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlcspg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or argument lies outside [-1, 1] (beyond the clamp tolerance).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A multi-index references a parameter coordinate that is not present.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The candidate set for the given weights would be infinite.
class InfiniteSet : public Error {
 public:
  using Error::Error;
};

class EllipticityViolation : public Error {
 public:
  using Error::Error;
};

class SolverDivergence : public Error {
 public:
  using Error::Error;
};

/// The residual bound of a basis pursuit problem cannot be met.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failure; carries the 1-based source line (0 if unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& msg, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mlcspg
