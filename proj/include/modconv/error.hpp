#pragma once

#include <stdexcept>
#include <string>

namespace modconv {

/// Root of every error the harness raises. Callers that only need a message
/// catch this; the CLI maps ConfigError/UsageError to exit 2 and the rest to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
  using Error::Error;
};

class NotFoundError : public Error {
  using Error::Error;
};

/// CSV header is missing a required column.
class SchemaError : public Error {
  using Error::Error;
};

/// A single CSV data row is invalid. `row()` is 1-based and counts the header as row 1.
class RowError : public Error {
 public:
  RowError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IntegrityError : public Error {
  using Error::Error;
};

class DomainError : public Error {
  using Error::Error;
};

/// The external media tool failed.
class ConversionError : public Error {
  using Error::Error;
};

/// An ASR worker or classify endpoint failed (exit, timeout, error reply, non-2xx).
class BackendError : public Error {
  using Error::Error;
};

/// A peer violated the line protocol (malformed line, unknown id).
class ProtocolError : public Error {
  using Error::Error;
};

/// A peer returned data that breaks an output contract (bad distribution).
class ContractError : public Error {
  using Error::Error;
};

class ConfigError : public Error {
  using Error::Error;
};

}  // namespace modconv
