#pragma once

#include <stdexcept>
#include <string>

namespace pltf {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IndexError : public Error {
  public:
    using Error::Error;
};

/// Two observations of the same (i, j, t) disagree.
class ConflictError : public Error {
  public:
    using Error::Error;
};

class DimensionError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Malformed file contents. `line()` is 0 for binary formats.
class FormatError : public Error {
  public:
    FormatError(const std::string& what, std::size_t line = 0)
        : Error(what), line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

class IoError : public Error {
  public:
    using Error::Error;
};

/// Base of failures caused by floating point breakdown (exit code 2).
class NumericalError : public Error {
  public:
    using Error::Error;
};

class DivergenceError : public NumericalError {
  public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : NumericalError(what), iteration_(iteration) {}
    std::size_t iteration() const { return iteration_; }

  private:
    std::size_t iteration_;
};

/// Line search shrank the step below its floor.
class StallError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// Cholesky failed even after jitter.
class NotPositiveDefiniteError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

/// AUC requested on single-class labels.
class UndefinedMetricError : public Error {
  public:
    using Error::Error;
};

class DegenerateSplitError : public Error {
  public:
    using Error::Error;
};

} // namespace pltf
