#pragma once

#include <stdexcept>
#include <string>

namespace biasvote {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

// corpus
class FormatError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& message, std::size_t line)
      : Error(message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class MapError : public Error {
public:
  using Error::Error;
};

// model
class TrainingError : public Error {
public:
  using Error::Error;
};

class ModelLoadError : public Error {
public:
  using Error::Error;
};

class VersionError : public ModelLoadError {
public:
  using ModelLoadError::ModelLoadError;
};

class AdapterError : public Error {
public:
  using Error::Error;
};

class AdapterUnavailable : public AdapterError {
public:
  using AdapterError::AdapterError;
};

class ProtocolError : public AdapterError {
public:
  using AdapterError::AdapterError;
};

// ensemble
class InvalidTuple : public Error {
public:
  using Error::Error;
};

// metrics
class UndefinedKappa : public Error {
public:
  using Error::Error;
};

// triage
class UnknownItem : public Error {
public:
  using Error::Error;
};

class UnknownCode : public Error {
public:
  using Error::Error;
};

class SchemaConflict : public Error {
public:
  using Error::Error;
};

class InsufficientOverlap : public Error {
public:
  using Error::Error;
};

class SessionNotFound : public Error {
public:
  using Error::Error;
};

}  // namespace biasvote
