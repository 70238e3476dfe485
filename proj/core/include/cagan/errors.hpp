#pragma once

#include <stdexcept>
#include <string>

namespace cagan {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, shapes, configurations or on-disk records. The CLI maps
// this family to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DatasetTooSmallError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A manifest entry whose files are missing or undecodable.
class IngestionError : public Error {
 public:
  IngestionError(std::string pair_id, const std::string& what)
      : Error("pair '" + pair_id + "': " + what), pair_id_(std::move(pair_id)) {}
  const std::string& pair_id() const noexcept { return pair_id_; }

 private:
  std::string pair_id_;
};

// Non-finite or out-of-range values reaching a loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class UnsupportedVersionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cagan
