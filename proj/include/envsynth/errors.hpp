// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace envsynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (not well-formed JSON, or wrong document shape).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A document parsed but violates a type invariant. `path` locates the field,
/// e.g. `tools[2].name`.
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class PathError : public Error {
 public:
  using Error::Error;
};

/// A remote endpoint (embedding provider, refiner, classifier, masker,
/// external executor) was unreachable or replied with garbage.
class RemoteError : public Error {
 public:
  using Error::Error;
};

class ProviderError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class RefinerError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class ExhaustedError : public Error {
 public:
  using Error::Error;
};

class TooLargeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Wire error codes for the tool runtime.
enum class ErrorCode : int {
  UnknownTool = 1001,
  InvalidArgs = 1002,
  NoSession = 1003,
  SchemaViolation = 1004,
  Business = 1005,
  DuplicateSession = 1006,
};

enum class Fault {
  UnknownTool,
  InvalidArgs,
  NoSession,
  NotLoaded,
  SchemaViolation,
  Business,
  DuplicateSession,
  UnknownEnvironment,
};

ErrorCode code_of(Fault fault) noexcept;
const char* fault_name(Fault fault) noexcept;

/// Failure raised by the session runtime. Carries the wire code and optional
/// structured data (a validation report for SchemaViolation).
class ToolError : public Error {
 public:
  ToolError(Fault fault, const std::string& what, nlohmann::json data = nullptr)
      : Error(what), fault_(fault), data_(std::move(data)) {}

  Fault fault() const noexcept { return fault_; }
  int code() const noexcept { return static_cast<int>(code_of(fault_)); }
  const nlohmann::json& data() const noexcept { return data_; }

 private:
  Fault fault_;
  nlohmann::json data_;
};

/// A replayed trajectory step failed. Indices are zero-based.
class ReplayError : public Error {
 public:
  ReplayError(std::size_t turn, std::size_t step, std::size_t flat_index,
              int code, const std::string& what)
      : Error("replay failed at turn " + std::to_string(turn) + " step " +
              std::to_string(step) + ": " + what),
        turn_(turn), step_(step), flat_index_(flat_index), code_(code) {}

  std::size_t turn() const noexcept { return turn_; }
  std::size_t step() const noexcept { return step_; }
  std::size_t flat_index() const noexcept { return flat_index_; }
  int code() const noexcept { return code_; }

 private:
  std::size_t turn_;
  std::size_t step_;
  std::size_t flat_index_;
  int code_;
};

}  // namespace envsynth
