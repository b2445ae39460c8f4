// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "envsynth/errors.hpp"
#include "envsynth/model.hpp"
#include "envsynth/runtime.hpp"
#include "envsynth/state.hpp"

namespace envsynth {

class EmptySuiteError : public Error {
 public:
  using Error::Error;
};

enum class Complexity { Simple, Medium, Complex, Boundary };
enum class ExpectedBehavior { Pass, ValidationError };

struct ToolCase {
  std::string tool;
  Json arguments = Json::object();
  bool expect_ok = true;
  std::optional<int> expect_code;    // only when !expect_ok
  std::optional<Json> expect_result;
  /// Documented effect of the call, applied to the scenario to build the
  /// state Layer 3 expects.
  std::vector<StateChange> changes;
  /// Paths whose values the case leaves unspecified; excluded in Layer 3.
  std::vector<std::string> changed_paths;

  bool operator==(const ToolCase&) const = default;
};

struct TestScenario {
  std::string scenario_id;
  Complexity complexity = Complexity::Simple;
  std::string description;
  ExpectedBehavior expected = ExpectedBehavior::Pass;
  ScenarioState scenario_data;
  /// Absent: one smoke call per tool with synthesized arguments.
  std::optional<std::vector<ToolCase>> tool_cases;

  bool operator==(const TestScenario&) const = default;
};

struct TestSuite {
  std::vector<TestScenario> scenarios;
};

/// Parses `{scenarios: [...]}`. Throws ParseError / SpecError (duplicate
/// scenario ids, expect_code on an ok case, unknown keys).
TestSuite parse_suite(std::string_view text);
TestSuite suite_from_json(const Json& doc);
Json to_json(const TestSuite& suite);

/// Root-cause tags: schema, state, logic, interface, scenario.
struct ReportError {
  std::string error_type;  // CRITICAL, LOAD, EXECUTION, RESULT, CONSISTENCY, ...
  std::string error_location;
  std::string error_details;
  std::string expected_vs_actual;
  std::string root_cause_tag;
  bool expected_error = false;

  bool operator==(const ReportError&) const = default;
};

struct Layer1Result {
  bool success = false;
  std::optional<std::string> error;
  bool operator==(const Layer1Result&) const = default;
};

struct Layer2Entry {
  std::string tool;
  bool passed = false;
  /// The call reached the tool: it returned or failed with a tool-level code.
  bool executed = false;
  std::optional<std::string> error;
  bool operator==(const Layer2Entry&) const = default;
};

struct Layer3Result {
  bool success = false;      // save_scenario succeeded
  bool consistency = false;  // schema-valid and equal to the expected state
  std::optional<std::string> error;
  bool operator==(const Layer3Result&) const = default;
};

struct LayeredReport {
  std::string scenario_id;
  std::string client_id;
  bool passed = false;
  Layer1Result layer1;
  std::vector<Layer2Entry> layer2;
  std::optional<Layer3Result> layer3;  // nullopt: skipped
  std::vector<ReportError> errors;
  /// Layer-1 outcome matched expected_behavior.
  bool load_as_expected = false;

  bool operator==(const LayeredReport&) const = default;
};

struct Criterion {
  bool passed = false;
  std::vector<std::string> details;
  bool operator==(const Criterion&) const = default;
};

struct EnvReport {
  std::string environment;
  std::string run_id;
  Criterion c1;  // served interface matches metadata
  Criterion c2;  // every tool executed at least once
  Criterion c3;  // results match expectations
  Criterion c4;  // state transitions correct
  bool verdict = false;
  std::vector<LayeredReport> scenarios;  // sorted by scenario_id

  bool operator==(const EnvReport&) const = default;
};

/// `<env>-<run id>_<scenario_id>`.
std::string scenario_client_id(const std::string& env, const std::string& run_id,
                               const std::string& scenario_id);

/// Arguments for a smoke call: required inputs only, taken from the loaded
/// scenario where a key or field of the same name exists.
Json smoke_arguments(const ToolSpec& tool, const ScenarioState& scenario,
                     const ScenarioSchema& schema);

/// Runs the three layers on a fresh session. Findings are report data; the
/// function does not throw for environment faults.
LayeredReport validate_scenario(const EnvironmentSpec& env, const TestScenario& scenario,
                                Runtime& runtime, const std::string& run_id = "r1");

/// Validates every scenario (in parallel when `parallel`) and evaluates
/// C1-C4. Throws EmptySuiteError.
EnvReport verify_environment(const EnvironmentSpec& env, const TestSuite& suite,
                             Runtime& runtime, const std::string& run_id = "r1",
                             bool parallel = true);

Json to_json(const LayeredReport& report);
Json to_json(const EnvReport& report);

}  // namespace envsynth
