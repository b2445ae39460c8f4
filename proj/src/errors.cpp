// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/errors.hpp"

namespace envsynth {

ErrorCode code_of(Fault fault) noexcept {
  switch (fault) {
    case Fault::UnknownTool: return ErrorCode::UnknownTool;
    case Fault::InvalidArgs: return ErrorCode::InvalidArgs;
    case Fault::NoSession:
    case Fault::NotLoaded: return ErrorCode::NoSession;
    case Fault::SchemaViolation: return ErrorCode::SchemaViolation;
    case Fault::Business: return ErrorCode::Business;
    case Fault::DuplicateSession: return ErrorCode::DuplicateSession;
    case Fault::UnknownEnvironment: return ErrorCode::InvalidArgs;
  }
  return ErrorCode::Business;
}

const char* fault_name(Fault fault) noexcept {
  switch (fault) {
    case Fault::UnknownTool: return "UnknownTool";
    case Fault::InvalidArgs: return "InvalidArgs";
    case Fault::NoSession: return "NoSession";
    case Fault::NotLoaded: return "NotLoaded";
    case Fault::SchemaViolation: return "SchemaViolation";
    case Fault::Business: return "BusinessError";
    case Fault::DuplicateSession: return "DuplicateSession";
    case Fault::UnknownEnvironment: return "UnknownEnvironment";
  }
  return "Unknown";
}

}  // namespace envsynth
