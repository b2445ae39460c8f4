// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/model.hpp"

#include <algorithm>

namespace envsynth {

const char* to_string(ValueKind kind) noexcept {
  switch (kind) {
    case ValueKind::String: return "string";
    case ValueKind::Integer: return "integer";
    case ValueKind::Number: return "number";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::List: return "list";
    case ValueKind::Record: return "record";
  }
  return "string";
}

const char* to_string(ParamClass cls) noexcept {
  return cls == ParamClass::Internal ? "internal" : "external";
}

const char* to_string(Side side) noexcept {
  return side == Side::User ? "user" : "assistant";
}

const char* to_string(ExecutorMode mode) noexcept {
  return mode == ExecutorMode::External ? "external" : "builtin";
}

const char* to_string(EffectSpec::Op op) noexcept {
  switch (op) {
    case EffectSpec::Op::List: return "list";
    case EffectSpec::Op::Get: return "get";
    case EffectSpec::Op::Filter: return "filter";
    case EffectSpec::Op::Create: return "create";
    case EffectSpec::Op::Update: return "update";
    case EffectSpec::Op::Delete: return "delete";
    case EffectSpec::Op::Compute: return "compute";
  }
  return "compute";
}

const char* to_string(Comparator cmp) noexcept {
  switch (cmp) {
    case Comparator::Eq: return "eq";
    case Comparator::Ne: return "ne";
    case Comparator::Lt: return "lt";
    case Comparator::Le: return "le";
    case Comparator::Gt: return "gt";
    case Comparator::Ge: return "ge";
    case Comparator::Contains: return "contains";
  }
  return "eq";
}

std::optional<ValueKind> value_kind_from(const std::string& text) {
  for (auto k : {ValueKind::String, ValueKind::Integer, ValueKind::Number,
                 ValueKind::Boolean, ValueKind::List, ValueKind::Record}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<ParamClass> param_class_from(const std::string& text) {
  if (text == "internal") return ParamClass::Internal;
  if (text == "external") return ParamClass::External;
  return std::nullopt;
}

namespace {

template <typename Range>
auto find_named(const Range& range, const std::string& name)
    -> decltype(&*std::begin(range)) {
  auto it = std::find_if(std::begin(range), std::end(range),
                         [&](const auto& p) { return p.name == name; });
  return it == std::end(range) ? nullptr : &*it;
}

}  // namespace

const ParamSpec* ToolSpec::input(const std::string& param) const {
  return find_named(inputs, param);
}

const ParamSpec* ToolSpec::output(const std::string& param) const {
  return find_named(outputs, param);
}

const ParamSpec* CollectionSpec::field(const std::string& name) const {
  return find_named(fields, name);
}

const CollectionSpec* ScenarioSchema::collection(const std::string& name) const {
  auto it = collections.find(name);
  return it == collections.end() ? nullptr : &it->second;
}

const ParamSpec* ScenarioSchema::scalar(const std::string& name) const {
  return find_named(scalars, name);
}

const ToolSpec* EnvironmentSpec::tool(const std::string& name) const {
  return find_named(tools, name);
}

std::string to_string(const ToolRef& ref) { return ref.env + "/" + ref.tool; }

std::vector<ToolCallStep> TrajectoryRecord::tool_calls() const {
  std::vector<ToolCallStep> calls;
  for (const auto& turn : turns) {
    for (const auto& step : turn.steps) {
      if (const auto* call = std::get_if<ToolCallStep>(&step)) calls.push_back(*call);
    }
  }
  return calls;
}

std::size_t TrajectoryRecord::tool_call_count() const {
  std::size_t n = 0;
  for (const auto& turn : turns) {
    n += static_cast<std::size_t>(std::count_if(
        turn.steps.begin(), turn.steps.end(),
        [](const Step& s) { return std::holds_alternative<ToolCallStep>(s); }));
  }
  return n;
}

}  // namespace envsynth
