#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aggpred {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidRangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. Carries the 1-based line number when known (0 otherwise).
class IngestError : public Error {
 public:
  IngestError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A required part of a session (channel file, field) is missing.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Assembled data violates a cross-field invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Non-finite or mis-shaped numeric input.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm, int iterations)
      : Error(what + " (gradient inf-norm " + std::to_string(gradient_norm) + " after " +
              std::to_string(iterations) + " iterations)"),
        gradient_norm_(gradient_norm),
        iterations_(iterations) {}

  double gradient_norm() const noexcept { return gradient_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

// A sample or vector does not match the feature layout a model was trained on.
class LayoutError : public Error {
 public:
  using Error::Error;
};

class RoutingError : public Error {
 public:
  using Error::Error;
};

// AUC requested on single-class labels.
class UndefinedAucError : public Error {
 public:
  using Error::Error;
};

}  // namespace aggpred
