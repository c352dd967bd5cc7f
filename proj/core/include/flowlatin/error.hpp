#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace flowlatin {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// flow_model
class UnsupportedVersion : public Error {
 public:
  explicit UnsupportedVersion(unsigned version)
      : Error("unsupported NetFlow version " + std::to_string(version)),
        version_(version) {}
  unsigned version() const noexcept { return version_; }

 private:
  unsigned version_;
};

class TruncatedDatagram : public Error {
 public:
  TruncatedDatagram(std::size_t actual, std::size_t expected)
      : Error("datagram length " + std::to_string(actual) + " does not match expected " +
              std::to_string(expected)),
        actual_(actual),
        expected_(expected) {}
  std::size_t actual() const noexcept { return actual_; }
  std::size_t expected() const noexcept { return expected_; }

 private:
  std::size_t actual_;
  std::size_t expected_;
};

/// Malformed text input. `line` is 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 protected:
  ParseError(std::size_t line, std::string message, int) : Error(message), line_(line) {}

 private:
  std::size_t line_;
};

class InvalidTimestamps : public Error {
 public:
  InvalidTimestamps(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// data_model
class SchemaError : public Error {
 public:
  using Error::Error;
};

class CoerceError : public Error {
 public:
  CoerceError(std::string field, const std::string& what)
      : Error(field.empty() ? what : "field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// script_lang
class LexError : public Error {
 public:
  LexError(std::size_t line, std::size_t column, const std::string& what)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Script grammar violation; `position` is the index of the offending token.
class SyntaxError : public ParseError {
 public:
  SyntaxError(std::size_t position, std::size_t line, std::size_t column, const std::string& what)
      : ParseError(line,
                   std::to_string(line) + ":" + std::to_string(column) + ": token " +
                       std::to_string(position) + ": " + what,
                   0),
        position_(position),
        column_(column) {}
  std::size_t position() const noexcept { return position_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t position_;
  std::size_t column_;
};

class PlanError : public Error {
 public:
  using Error::Error;
};

/// Static typing failure while inferring schemas.
class TypeError : public Error {
 public:
  using Error::Error;
};

/// Runtime expression failure (e.g. integer division by zero).
class EvalError : public Error {
 public:
  using Error::Error;
};

// planner
class CompileError : public Error {
 public:
  using Error::Error;
};

// mr_engine
class EngineError : public Error {
 public:
  using Error::Error;
};

class JobError : public Error {
 public:
  JobError(std::size_t split, std::size_t offset, const std::string& what)
      : Error("split " + std::to_string(split) + " offset " + std::to_string(offset) + ": " +
              what),
        split_(split),
        offset_(offset) {}
  std::size_t split() const noexcept { return split_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t split_;
  std::size_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// netflow_analyses
class AnalysisError : public Error {
 public:
  using Error::Error;
};

// bench_harness
class BenchIntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowlatin
