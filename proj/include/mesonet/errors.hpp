#pragma once

#include <stdexcept>
#include <string>

namespace mesonet {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument violates a precondition.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be parsed or is structurally inconsistent.
class DataFormatError : public Error {
 public:
  explicit DataFormatError(const std::string& what, long line = -1)
      : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// A numerical routine failed (non-convergence, singular system, ...).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, long iterations = -1)
      : Error(iterations >= 0
                  ? what + " after " + std::to_string(iterations) + " iterations"
                  : what),
        iterations_(iterations) {}
  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

/// The held-out signal needed for projection learning is identically zero.
class DegenerateSignalError : public NumericalError {
 public:
  explicit DegenerateSignalError(const std::string& what) : NumericalError(what) {}
};

/// A projection-learning routine tried to read an edge inside the hypothesis set.
class HeldOutViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace mesonet
