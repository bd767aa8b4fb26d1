#pragma once

#include <stdexcept>
#include <string>

namespace floodbench {

// Base of every error raised by the library. Callers that only care about
// "something went wrong with the inputs" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class MalformedLabel : public Error {
 public:
  using Error::Error;
};

class InvalidValue : public Error {
 public:
  using Error::Error;
};

// Raised by kernels whose normalisation would divide by zero
// (constant disparity, zero-variance activation channel).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class UnsupportedKernel : public Error {
 public:
  using Error::Error;
};

class EmptyDataset : public Error {
 public:
  using Error::Error;
};

class MissingPredictions : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace floodbench
