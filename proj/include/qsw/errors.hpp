#pragma once

#include <stdexcept>
#include <string>

namespace qsw {

// Base of every error raised by the library. Callers that only care about
// "the computation failed" catch this; the CLI maps it to a per-row error.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

// Walker support reached the edge of the truncated lattice.
class TruncationError : public Error {
public:
  using Error::Error;
};

class ResourceError : public Error {
public:
  using Error::Error;
};

class UnsupportedFamilyError : public Error {
public:
  using Error::Error;
};

class SingularKernelError : public Error {
public:
  using Error::Error;
};

class ConditioningError : public Error {
public:
  ConditioningError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

private:
  double condition_;
};

// z above the largest value for which double precision results were validated.
class OutOfValidatedRangeError : public Error {
public:
  using Error::Error;
};

class ConsistencyError : public Error {
public:
  using Error::Error;
};

class BracketError : public Error {
public:
  using Error::Error;
};

class FitDegenerateError : public Error {
public:
  FitDegenerateError(const std::string& what, double constant)
      : Error(what), constant_(constant) {}
  double constant() const noexcept { return constant_; }

private:
  double constant_;
};

} // namespace qsw
