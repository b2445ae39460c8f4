// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace envsynth {

using Json = nlohmann::json;

enum class ValueKind { String, Integer, Number, Boolean, List, Record };
enum class ParamClass { External, Internal };
enum class Side { Assistant, User };
enum class ExecutorMode { Builtin, External };

const char* to_string(ValueKind kind) noexcept;
const char* to_string(ParamClass cls) noexcept;
const char* to_string(Side side) noexcept;
const char* to_string(ExecutorMode mode) noexcept;

std::optional<ValueKind> value_kind_from(const std::string& text);
std::optional<ParamClass> param_class_from(const std::string& text);

/// One element of a tool's input space I(v) or output space O(v), or one
/// field of a scenario record.
struct ParamSpec {
  std::string name;
  std::string description;
  ValueKind value_kind = ValueKind::String;
  bool required = true;
  std::optional<Json> default_value;
  std::optional<std::string> pattern;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<ParamClass> classification_hint;

  /// Optional parameters (not required, or carrying a default) never need a
  /// producer.
  bool optional() const noexcept { return !required || default_value.has_value(); }

  bool operator==(const ParamSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Declarative executor bindings.

/// Where an effect takes a value from.
struct ValueSource {
  enum class Kind {
    Arg,      // named tool argument
    Literal,  // constant
    Counter,  // per-session generated id: prefix + n
    Field,    // field of the record the effect targeted
    Collect,  // list of a field across matched records
    Records,  // matched records themselves
    Count,    // number of matched records
    State,    // top-level scalar of the scenario
  };
  Kind kind = Kind::Literal;
  std::string text;  // argument, prefix, field or scalar name
  Json literal;

  bool operator==(const ValueSource&) const = default;
};

enum class Comparator { Eq, Ne, Lt, Le, Gt, Ge, Contains };

struct Predicate {
  std::string field;
  Comparator cmp = Comparator::Eq;
  std::string arg;

  bool operator==(const Predicate&) const = default;
};

/// Existence check: the value of argument `arg` must be a key in `collection`.
struct Requirement {
  std::string collection;
  std::string arg;

  bool operator==(const Requirement&) const = default;
};

struct EffectSpec {
  enum class Op { List, Get, Filter, Create, Update, Delete, Compute };
  Op op = Op::Compute;
  std::optional<std::string> collection;
  std::optional<std::string> key_from;
  std::map<std::string, ValueSource> set_fields;
  std::vector<Predicate> where;
  std::vector<Requirement> requires_;
  std::map<std::string, ValueSource> returns;

  bool operator==(const EffectSpec&) const = default;
};

const char* to_string(EffectSpec::Op op) noexcept;
const char* to_string(Comparator cmp) noexcept;

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ParamSpec> inputs;
  std::vector<ParamSpec> outputs;
  std::optional<EffectSpec> effect;
  Side side = Side::Assistant;

  const ParamSpec* input(const std::string& param) const;
  const ParamSpec* output(const std::string& param) const;

  bool operator==(const ToolSpec&) const = default;
};

struct CollectionSpec {
  std::string key;
  std::vector<ParamSpec> fields;

  const ParamSpec* field(const std::string& name) const;

  bool operator==(const CollectionSpec&) const = default;
};

/// Scenario database schema D: keyed collections of records plus top-level
/// scalars. One level of nesting.
struct ScenarioSchema {
  std::map<std::string, CollectionSpec> collections;
  std::vector<ParamSpec> scalars;

  const CollectionSpec* collection(const std::string& name) const;
  const ParamSpec* scalar(const std::string& name) const;

  bool operator==(const ScenarioSchema&) const = default;
};

/// Interface entry of the metadata catalog: what the environment claims each
/// tool looks like.
struct ToolSignature {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  bool operator==(const ToolSignature&) const = default;
};

struct EnvironmentMetadata {
  std::string description;
  std::string domain;
  std::string version;
  std::optional<std::vector<ToolSignature>> tools;

  bool operator==(const EnvironmentMetadata&) const = default;
};

/// e = (m, D, pi, V_e).
struct EnvironmentSpec {
  std::string name;
  EnvironmentMetadata metadata;
  ScenarioSchema schema;
  std::vector<ToolSpec> tools;
  ExecutorMode executor_mode = ExecutorMode::Builtin;
  std::optional<std::string> executor_url;

  const ToolSpec* tool(const std::string& name) const;

  bool operator==(const EnvironmentSpec&) const = default;
};

/// Globally unique tool identity: (environment, tool name).
struct ToolRef {
  std::string env;
  std::string tool;

  auto operator<=>(const ToolRef&) const = default;
  bool operator==(const ToolRef&) const = default;
};

std::string to_string(const ToolRef& ref);

// ---------------------------------------------------------------------------
// Trajectories.

struct ToolCallStep {
  std::string tool;
  Json arguments = Json::object();
  std::vector<std::string> masked_args;
  std::optional<Json> result;
  /// Consecutive gold calls sharing a block id may match in any order.
  std::optional<int> block;

  bool operator==(const ToolCallStep&) const = default;
};

struct MessageStep {
  Side role = Side::Assistant;
  std::string text;

  bool operator==(const MessageStep&) const = default;
};

using Step = std::variant<ToolCallStep, MessageStep>;

struct Turn {
  std::optional<std::string> user_query;
  std::vector<Step> steps;

  bool operator==(const Turn&) const = default;
};

struct TrajectoryRecord {
  std::string environment;
  std::vector<Turn> turns;

  /// Tool calls across all turns, in order.
  std::vector<ToolCallStep> tool_calls() const;
  std::size_t tool_call_count() const;

  bool operator==(const TrajectoryRecord&) const = default;
};

}  // namespace envsynth
