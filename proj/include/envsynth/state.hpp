// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "envsynth/model.hpp"

namespace envsynth {

/// A scenario state is a JSON object: each schema collection maps to a list
/// of records, each scalar to a value.
using ScenarioState = Json;

/// Default pattern for a `current_time` scalar: ISO-8601 local date-time.
inline constexpr const char* kIsoDateTimePattern =
    R"(^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:\d{2})?$)";

struct Violation {
  std::string path;
  std::string rule;  // missing | pattern | bounds | duplicate-key | unknown-field | type
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  Json to_json() const;
};

/// Checks one value against a parameter's kind, pattern and bounds. Bounds
/// apply to the value of numbers and to the length of strings and lists.
std::optional<Violation> check_value(const ParamSpec& spec, const Json& value,
                                     const std::string& path);

/// Full-match test of `text` against an ECMAScript pattern (search semantics;
/// anchor the pattern to require a full match). Compiled patterns are cached.
bool pattern_matches(const std::string& pattern, const std::string& text);
bool pattern_compiles(const std::string& pattern);

/// Strict validation: unknown fields are violations.
ValidationReport validate_state(const ScenarioState& state, const ScenarioSchema& schema);

// ---------------------------------------------------------------------------
// Paths: `name`, `name[sel]`, `a.b`, `coll[KEY].field`, `coll[*].field`.
// On a collection, `sel` selects records by key value (`*` for all). On any
// other list, `sel` is a zero-based index.

struct PathSegment {
  std::string name;
  std::optional<std::string> selector;

  bool operator==(const PathSegment&) const = default;
};

struct StatePath {
  std::vector<PathSegment> segments;
  std::string text;
};

/// Throws PathError on malformed text.
StatePath parse_path(std::string_view text);

/// Removes whatever the path resolves to; paths resolving to nothing are a
/// no-op.
void remove_path(ScenarioState& state, const StatePath& path, const ScenarioSchema& schema);

/// Edit applied to a state: set a value, append to a list, or remove.
struct StateChange {
  enum class Op { Set, Append, Remove };
  std::string path;
  Op op = Op::Set;
  Json value;

  bool operator==(const StateChange&) const = default;
};

StateChange change_from_json(const Json& doc);
Json to_json(const StateChange& change);

/// Applies changes in order. Throws PathError when a path cannot be resolved.
void apply_changes(ScenarioState& state, const std::vector<StateChange>& changes,
                   const ScenarioSchema& schema);

/// Normalized state: excluded paths removed, collections sorted by key value,
/// record keys sorted. Throws PathError for malformed exclusions.
Json canonical_form(const ScenarioState& state, const ScenarioSchema& schema,
                    const std::vector<std::string>& excluded_paths = {});

/// Byte-stable serialization of canonical_form. Numbers use shortest
/// round-trip rendering.
std::string canonicalize_state(const ScenarioState& state, const ScenarioSchema& schema,
                               const std::vector<std::string>& excluded_paths = {});

/// Structural equality of canonical forms where numbers may differ by
/// `rel_tolerance` relative to the larger magnitude.
bool states_equivalent(const ScenarioState& a, const ScenarioState& b,
                       const ScenarioSchema& schema,
                       const std::vector<std::string>& excluded_paths,
                       double rel_tolerance);

/// Key value of a record as it appears in `[sel]` selectors.
std::string key_text(const Json& key_value);

}  // namespace envsynth
