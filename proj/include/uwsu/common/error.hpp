#pragma once

#include <stdexcept>
#include <string>

namespace uwsu {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or grid mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input violates a value-level contract (range, finiteness, vocabulary).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate; `stage()` names the computation that produced it.
class NumericError : public Error {
 public:
  NumericError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace uwsu
