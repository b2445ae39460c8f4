// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/verifier.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "envsynth/environment_io.hpp"

namespace envsynth {

namespace {

constexpr double kStateTolerance = 1e-9;

void allow_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; })) {
      throw SpecError(path + "." + it.key(), "unknown key");
    }
  }
}

std::string string_field(const Json& obj, const char* key, const std::string& path,
                         bool required) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw SpecError(path + "." + key, "missing");
    return {};
  }
  if (!it->is_string()) throw SpecError(path + "." + key, "expected a string");
  return it->get<std::string>();
}

const char* to_string(Complexity c) {
  switch (c) {
    case Complexity::Simple: return "simple";
    case Complexity::Medium: return "medium";
    case Complexity::Complex: return "complex";
    case Complexity::Boundary: return "boundary";
  }
  return "simple";
}

Complexity complexity_from(const std::string& s, const std::string& path) {
  if (s == "simple") return Complexity::Simple;
  if (s == "medium") return Complexity::Medium;
  if (s == "complex") return Complexity::Complex;
  if (s == "boundary") return Complexity::Boundary;
  throw SpecError(path, "complexity_level must be simple, medium, complex or boundary");
}

ToolCase case_from_json(const Json& doc, const std::string& path) {
  if (!doc.is_object()) throw SpecError(path, "expected a record");
  allow_keys(doc, path, {"tool", "arguments", "expect", "expect_code", "expect_result", "changes",
                         "changed_paths"});
  ToolCase c;
  c.tool = string_field(doc, "tool", path, true);
  if (auto it = doc.find("arguments"); it != doc.end()) {
    if (!it->is_object()) throw SpecError(path + ".arguments", "expected a record");
    c.arguments = *it;
  }
  std::string expect = string_field(doc, "expect", path, false);
  if (expect.empty() || expect == "ok") {
    c.expect_ok = true;
  } else if (expect == "error") {
    c.expect_ok = false;
  } else {
    throw SpecError(path + ".expect", "must be ok or error");
  }
  if (auto it = doc.find("expect_code"); it != doc.end()) {
    if (c.expect_ok) throw SpecError(path + ".expect_code", "only allowed when expect is error");
    if (!it->is_number_integer()) throw SpecError(path + ".expect_code", "expected an integer");
    c.expect_code = it->get<int>();
  }
  if (auto it = doc.find("expect_result"); it != doc.end()) c.expect_result = *it;
  if (auto it = doc.find("changes"); it != doc.end()) {
    if (!it->is_array()) throw SpecError(path + ".changes", "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      try {
        c.changes.push_back(change_from_json((*it)[i]));
        parse_path(c.changes.back().path);
      } catch (const Error& e) {
        throw SpecError(path + ".changes[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  if (auto it = doc.find("changed_paths"); it != doc.end()) {
    if (!it->is_array()) throw SpecError(path + ".changed_paths", "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string p = path + ".changed_paths[" + std::to_string(i) + "]";
      if (!(*it)[i].is_string()) throw SpecError(p, "expected a string");
      try {
        parse_path((*it)[i].get<std::string>());
      } catch (const PathError& e) {
        throw SpecError(p, e.what());
      }
      c.changed_paths.push_back((*it)[i].get<std::string>());
    }
  }
  return c;
}

Json to_json(const ToolCase& c) {
  Json out = {{"tool", c.tool}, {"arguments", c.arguments}, {"expect", c.expect_ok ? "ok" : "error"}};
  if (c.expect_code) out["expect_code"] = *c.expect_code;
  if (c.expect_result) out["expect_result"] = *c.expect_result;
  if (!c.changes.empty()) {
    Json changes = Json::array();
    for (const auto& ch : c.changes) changes.push_back(to_json(ch));
    out["changes"] = std::move(changes);
  }
  if (!c.changed_paths.empty()) out["changed_paths"] = c.changed_paths;
  return out;
}

// Empty string when `result` matches the declared outputs.
std::string shape_mismatch(const ToolSpec& tool, const Json& result) {
  if (!result.is_object()) return "result is not a record";
  for (const auto& out : tool.outputs) {
    auto it = result.find(out.name);
    if (it == result.end() || it->is_null()) {
      if (out.required) return "missing output '" + out.name + "'";
      continue;
    }
    if (auto v = check_value(out, *it, out.name)) {
      return "output " + v->path + " (" + v->rule + "): " + v->message;
    }
  }
  for (auto it = result.begin(); it != result.end(); ++it) {
    if (tool.output(it.key()) == nullptr) return "undeclared output '" + it.key() + "'";
  }
  return {};
}

Json kind_default(const ParamSpec& p) {
  switch (p.value_kind) {
    case ValueKind::String: {
      auto len = static_cast<std::size_t>(std::max(1.0, p.min.value_or(1.0)));
      return std::string(len, 'a');
    }
    case ValueKind::Integer: return static_cast<long long>(p.min.value_or(0.0));
    case ValueKind::Number: return p.min.value_or(0.0);
    case ValueKind::Boolean: return false;
    case ValueKind::List: return Json::array();
    case ValueKind::Record: return Json::object();
  }
  return nullptr;
}

std::string describe_outcome(bool ok, int code) {
  return ok ? std::string("ok") : "error " + std::to_string(code);
}

class ScenarioRun {
 public:
  ScenarioRun(const EnvironmentSpec& env, const TestScenario& scenario, Runtime& runtime,
              std::string client_id)
      : env_(env), scenario_(scenario), runtime_(runtime) {
    report_.scenario_id = scenario.scenario_id;
    report_.client_id = std::move(client_id);
  }

  LayeredReport run() {
    try {
      ScopedSession session(runtime_, report_.client_id, env_.name);
      if (layer1()) {
        layer2();
        layer3();
      }
    } catch (const Error& e) {
      if (report_.layer1.success || !report_.errors.empty()) {
        fail("CRITICAL", "runtime", e.what(), "", "interface");
      } else {
        critical_load_failure(e.what());
      }
    }
    report_.passed = report_.errors.empty() ||
                     std::all_of(report_.errors.begin(), report_.errors.end(),
                                 [](const ReportError& e) { return e.expected_error; });
    return std::move(report_);
  }

 private:
  void fail(std::string type, std::string location, std::string details, std::string eva,
            std::string tag, bool expected = false) {
    report_.errors.push_back({std::move(type), std::move(location), std::move(details),
                              std::move(eva), std::move(tag), expected});
  }

  void critical_load_failure(const std::string& why) {
    report_.layer1 = {false, why};
    report_.load_as_expected = false;
    fail("CRITICAL", "load_scenario", why, "load ok vs load failed", "scenario");
  }

  // Returns true when layers 2 and 3 should run.
  bool layer1() {
    try {
      runtime_.load_scenario(report_.client_id, scenario_.scenario_data);
      report_.layer1 = {true, std::nullopt};
    } catch (const ToolError& e) {
      report_.layer1 = {false, std::string(e.what())};
      if (scenario_.expected == ExpectedBehavior::ValidationError &&
          e.fault() == Fault::SchemaViolation) {
        report_.load_as_expected = true;
        fail("VALIDATION_ERROR", "load_scenario", e.what(),
             "validation error vs validation error", "scenario", true);
        return false;
      }
      critical_load_failure(e.what());
      return false;
    }
    if (scenario_.expected == ExpectedBehavior::ValidationError) {
      report_.load_as_expected = false;
      fail("UNEXPECTED_SUCCESS", "load_scenario",
           "Tool succeeded when validation error was expected",
           "validation error vs ok", "schema");
      return false;
    }
    report_.load_as_expected = true;
    return true;
  }

  void layer2() {
    if (scenario_.tool_cases) {
      for (const auto& c : *scenario_.tool_cases) run_case(c);
      return;
    }
    for (const auto& tool : env_.tools) run_smoke(tool);
  }

  struct Outcome {
    bool executed = false;
    bool ok = false;
    int code = 0;
    Json result;
    std::string message;
  };

  Outcome invoke(const std::string& tool, const Json& args) {
    Outcome o;
    try {
      o.result = runtime_.call_tool(report_.client_id, tool, args);
      o.executed = o.ok = true;
    } catch (const ToolError& e) {
      o.code = e.code();
      o.message = e.what();
      o.executed = e.fault() != Fault::NoSession && e.fault() != Fault::NotLoaded &&
                   e.fault() != Fault::UnknownTool;
    } catch (const RemoteError& e) {
      o.message = e.what();
    }
    return o;
  }

  void record(const std::string& tool, const Outcome& o, std::optional<std::string> error) {
    report_.layer2.push_back({tool, !error.has_value(), o.executed, std::move(error)});
  }

  void run_case(const ToolCase& c) {
    Outcome o = invoke(c.tool, c.arguments);
    const std::string where = "tool:" + c.tool;
    if (!o.executed && !o.ok) {
      std::string why = o.message.empty() ? "call did not reach the tool" : o.message;
      fail("EXECUTION", where, why, "executed vs " + describe_outcome(false, o.code), "interface");
      record(c.tool, o, why);
      return;
    }
    if (c.expect_ok) {
      if (!o.ok) {
        fail("EXECUTION", where, o.message, "ok vs " + describe_outcome(false, o.code), "logic");
        record(c.tool, o, o.message);
        return;
      }
      if (const ToolSpec* spec = env_.tool(c.tool)) {
        if (std::string bad = shape_mismatch(*spec, o.result); !bad.empty()) {
          fail("RESULT_SHAPE", where, bad, "declared outputs vs " + o.result.dump(), "interface");
          record(c.tool, o, bad);
          return;
        }
      }
      if (c.expect_result && *c.expect_result != o.result) {
        std::string eva = c.expect_result->dump() + " vs " + o.result.dump();
        fail("RESULT_MISMATCH", where, "unexpected result", eva, "logic");
        record(c.tool, o, "unexpected result: " + eva);
        return;
      }
      expected_changes_.insert(expected_changes_.end(), c.changes.begin(), c.changes.end());
      excluded_.insert(excluded_.end(), c.changed_paths.begin(), c.changed_paths.end());
      record(c.tool, o, std::nullopt);
      return;
    }
    if (o.ok) {
      std::string why = "Tool succeeded when an error was expected";
      fail("UNEXPECTED_SUCCESS", where, why, "error vs ok", "logic");
      record(c.tool, o, why);
      return;
    }
    if (c.expect_code && *c.expect_code != o.code) {
      std::string eva = describe_outcome(false, *c.expect_code) + " vs " + describe_outcome(false, o.code);
      fail("ERROR_CODE", where, o.message, eva, "logic");
      record(c.tool, o, "wrong error code: " + eva);
      return;
    }
    record(c.tool, o, std::nullopt);
  }

  void run_smoke(const ToolSpec& tool) {
    ScenarioState current = runtime_.save_scenario(report_.client_id);
    Json args = smoke_arguments(tool, current, env_.schema);
    Outcome o = invoke(tool.name, args);
    const std::string where = "tool:" + tool.name;
    if (o.ok) {
      if (std::string bad = shape_mismatch(tool, o.result); !bad.empty()) {
        fail("RESULT_SHAPE", where, bad, "declared outputs vs " + o.result.dump(), "interface");
        record(tool.name, o, bad);
        return;
      }
      record(tool.name, o, std::nullopt);
      return;
    }
    if (o.executed && o.code == static_cast<int>(ErrorCode::Business)) {
      record(tool.name, o, std::nullopt);
      return;
    }
    fail("EXECUTION", where, o.message, "ok vs " + describe_outcome(false, o.code),
         o.executed ? "logic" : "interface");
    record(tool.name, o, o.message);
  }

  void layer3() {
    Layer3Result l3;
    ScenarioState saved;
    try {
      saved = runtime_.save_scenario(report_.client_id);
      l3.success = true;
    } catch (const Error& e) {
      l3.error = e.what();
      fail("CONSISTENCY", "save_scenario", e.what(), "snapshot vs failure", "interface");
      report_.layer3 = std::move(l3);
      return;
    }
    ValidationReport valid = validate_state(saved, env_.schema);
    if (!valid.ok()) {
      const auto& v = valid.violations.front();
      l3.error = "saved state violates the schema at " + v.path + " (" + v.rule + ")";
      fail("CONSISTENCY", "save_scenario", *l3.error, "schema-valid vs invalid", "schema");
      report_.layer3 = std::move(l3);
      return;
    }
    if (!scenario_.tool_cases) {
      l3.consistency = true;
      report_.layer3 = std::move(l3);
      return;
    }
    ScenarioState expected = scenario_.scenario_data;
    try {
      apply_changes(expected, expected_changes_, env_.schema);
    } catch (const PathError& e) {
      l3.error = std::string("documented changes do not apply: ") + e.what();
      fail("CONSISTENCY", "save_scenario", *l3.error, "", "scenario");
      report_.layer3 = std::move(l3);
      return;
    }
    if (!states_equivalent(saved, expected, env_.schema, excluded_, kStateTolerance)) {
      std::string want = canonicalize_state(expected, env_.schema, excluded_);
      std::string got = canonicalize_state(saved, env_.schema, excluded_);
      l3.error = "saved state differs from the documented effects";
      fail("CONSISTENCY", "save_scenario", *l3.error, want + " vs " + got, "state");
    } else {
      l3.consistency = true;
    }
    report_.layer3 = std::move(l3);
  }

  const EnvironmentSpec& env_;
  const TestScenario& scenario_;
  Runtime& runtime_;
  LayeredReport report_;
  std::vector<StateChange> expected_changes_;
  std::vector<std::string> excluded_;
};

Json to_json(const ReportError& e) {
  return {{"error_type", e.error_type},         {"error_location", e.error_location},
          {"error_details", e.error_details},   {"expected_vs_actual", e.expected_vs_actual},
          {"root_cause_tag", e.root_cause_tag}, {"expected_error", e.expected_error}};
}

Json to_json(const Criterion& c) { return {{"passed", c.passed}, {"details", c.details}}; }

Criterion interface_criterion(const EnvironmentSpec& env, Runtime& runtime) {
  Criterion c{true, {}};
  if (!env.metadata.tools) return c;
  Json served = runtime.list_tools(env.name);
  auto names_of = [](const Json& params) {
    std::set<std::string> out;
    for (const auto& p : params) out.insert(p.at("name").get<std::string>());
    return out;
  };
  for (const auto& sig : *env.metadata.tools) {
    auto it = std::find_if(served.begin(), served.end(),
                           [&](const Json& t) { return t.at("name") == sig.name; });
    if (it == served.end()) {
      c.passed = false;
      c.details.push_back("metadata tool '" + sig.name + "' is not served");
      continue;
    }
    std::set<std::string> in(sig.inputs.begin(), sig.inputs.end());
    std::set<std::string> out(sig.outputs.begin(), sig.outputs.end());
    if (names_of(it->value("inputs", Json::array())) != in) {
      c.passed = false;
      c.details.push_back("inputs of '" + sig.name + "' differ from metadata");
    }
    if (names_of(it->value("outputs", Json::array())) != out) {
      c.passed = false;
      c.details.push_back("outputs of '" + sig.name + "' differ from metadata");
    }
  }
  return c;
}

}  // namespace

TestSuite suite_from_json(const Json& doc) {
  if (!doc.is_object()) throw SpecError("$", "suite must be a record");
  allow_keys(doc, "$", {"scenarios"});
  auto list = doc.find("scenarios");
  if (list == doc.end() || !list->is_array()) throw SpecError("$.scenarios", "expected a list");
  TestSuite suite;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < list->size(); ++i) {
    const Json& s = (*list)[i];
    const std::string path = "scenarios[" + std::to_string(i) + "]";
    if (!s.is_object()) throw SpecError(path, "expected a record");
    allow_keys(s, path, {"scenario_id", "complexity_level", "description", "expected_behavior",
                         "scenario_data", "tool_cases"});
    TestScenario sc;
    sc.scenario_id = string_field(s, "scenario_id", path, true);
    if (!ids.insert(sc.scenario_id).second) {
      throw SpecError(path + ".scenario_id", "duplicate scenario id '" + sc.scenario_id + "'");
    }
    std::string level = string_field(s, "complexity_level", path, false);
    sc.complexity = level.empty() ? Complexity::Simple
                                  : complexity_from(level, path + ".complexity_level");
    sc.description = string_field(s, "description", path, false);
    std::string behavior = string_field(s, "expected_behavior", path, false);
    if (behavior.empty() || behavior == "pass") {
      sc.expected = ExpectedBehavior::Pass;
    } else if (behavior == "validation_error") {
      sc.expected = ExpectedBehavior::ValidationError;
    } else {
      throw SpecError(path + ".expected_behavior", "must be pass or validation_error");
    }
    auto data = s.find("scenario_data");
    if (data == s.end()) throw SpecError(path + ".scenario_data", "missing");
    sc.scenario_data = *data;
    if (auto cases = s.find("tool_cases"); cases != s.end()) {
      if (!cases->is_array()) throw SpecError(path + ".tool_cases", "expected a list");
      std::vector<ToolCase> out;
      for (std::size_t j = 0; j < cases->size(); ++j) {
        out.push_back(case_from_json((*cases)[j], path + ".tool_cases[" + std::to_string(j) + "]"));
      }
      sc.tool_cases = std::move(out);
    }
    suite.scenarios.push_back(std::move(sc));
  }
  return suite;
}

TestSuite parse_suite(std::string_view text) { return suite_from_json(parse_json_text(text)); }

Json to_json(const TestSuite& suite) {
  Json list = Json::array();
  for (const auto& s : suite.scenarios) {
    Json doc = {{"scenario_id", s.scenario_id},
                {"complexity_level", to_string(s.complexity)},
                {"description", s.description},
                {"expected_behavior",
                 s.expected == ExpectedBehavior::Pass ? "pass" : "validation_error"},
                {"scenario_data", s.scenario_data}};
    if (s.tool_cases) {
      Json cases = Json::array();
      for (const auto& c : *s.tool_cases) cases.push_back(to_json(c));
      doc["tool_cases"] = std::move(cases);
    }
    list.push_back(std::move(doc));
  }
  return {{"scenarios", std::move(list)}};
}

std::string scenario_client_id(const std::string& env, const std::string& run_id,
                               const std::string& scenario_id) {
  return env + "-" + run_id + "_" + scenario_id;
}

Json smoke_arguments(const ToolSpec& tool, const ScenarioState& scenario,
                     const ScenarioSchema& schema) {
  Json args = Json::object();
  for (const auto& p : tool.inputs) {
    if (p.optional()) continue;
    std::optional<Json> value;
    for (const auto& [name, coll] : schema.collections) {
      if (coll.key != p.name) continue;
      auto list = scenario.find(name);
      if (list != scenario.end() && list->is_array() && !list->empty()) {
        value = (*list)[0].value(p.name, Json());
        break;
      }
    }
    if (!value) {
      for (const auto& [name, coll] : schema.collections) {
        if (coll.field(p.name) == nullptr) continue;
        auto list = scenario.find(name);
        if (list == scenario.end() || !list->is_array()) continue;
        for (const auto& rec : *list) {
          if (rec.contains(p.name) && !check_value(p, rec[p.name], p.name)) {
            value = rec[p.name];
            break;
          }
        }
        if (value) break;
      }
    }
    if (!value && schema.scalar(p.name) && scenario.contains(p.name)) value = scenario[p.name];
    if (!value || value->is_null()) value = kind_default(p);
    args[p.name] = *value;
  }
  return args;
}

LayeredReport validate_scenario(const EnvironmentSpec& env, const TestScenario& scenario,
                                Runtime& runtime, const std::string& run_id) {
  return ScenarioRun(env, scenario, runtime,
                     scenario_client_id(env.name, run_id, scenario.scenario_id))
      .run();
}

EnvReport verify_environment(const EnvironmentSpec& env, const TestSuite& suite, Runtime& runtime,
                             const std::string& run_id, bool parallel) {
  if (suite.scenarios.empty()) throw EmptySuiteError("test suite has no scenarios");
  EnvReport report;
  report.environment = env.name;
  report.run_id = run_id;

  if (parallel) {
    std::vector<std::future<LayeredReport>> pending;
    for (const auto& s : suite.scenarios) {
      pending.push_back(std::async(std::launch::async, [&env, &s, &runtime, &run_id] {
        return validate_scenario(env, s, runtime, run_id);
      }));
    }
    for (auto& f : pending) report.scenarios.push_back(f.get());
  } else {
    for (const auto& s : suite.scenarios) {
      report.scenarios.push_back(validate_scenario(env, s, runtime, run_id));
    }
  }
  std::sort(report.scenarios.begin(), report.scenarios.end(),
            [](const LayeredReport& a, const LayeredReport& b) { return a.scenario_id < b.scenario_id; });

  report.c1 = interface_criterion(env, runtime);

  report.c2.passed = true;
  for (const auto& tool : env.tools) {
    bool ran = std::any_of(report.scenarios.begin(), report.scenarios.end(), [&](const LayeredReport& r) {
      return std::any_of(r.layer2.begin(), r.layer2.end(),
                         [&](const Layer2Entry& e) { return e.tool == tool.name && e.executed; });
    });
    if (!ran) {
      report.c2.passed = false;
      report.c2.details.push_back("tool '" + tool.name + "' never executed");
    }
  }

  report.c3.passed = true;
  report.c4.passed = true;
  for (const auto& r : report.scenarios) {
    if (!r.load_as_expected) {
      report.c3.passed = false;
      report.c3.details.push_back(r.scenario_id + ": load outcome differs from expected_behavior");
    }
    for (const auto& e : r.layer2) {
      if (!e.passed) {
        report.c3.passed = false;
        report.c3.details.push_back(r.scenario_id + ": " + e.tool + ": " + e.error.value_or(""));
      }
    }
    if (r.layer3 && !r.layer3->consistency) {
      report.c4.passed = false;
      report.c4.details.push_back(r.scenario_id + ": " + r.layer3->error.value_or("inconsistent"));
    }
  }
  report.verdict = report.c1.passed && report.c2.passed && report.c3.passed && report.c4.passed;
  return report;
}

Json to_json(const LayeredReport& r) {
  Json l1 = {{"success", r.layer1.success}};
  if (r.layer1.error) l1["error"] = *r.layer1.error;
  Json l2 = Json::array();
  for (const auto& e : r.layer2) {
    Json entry = {{"tool", e.tool}, {"passed", e.passed}, {"executed", e.executed}};
    if (e.error) entry["error"] = *e.error;
    l2.push_back(std::move(entry));
  }
  Json l3 = "skipped";
  if (r.layer3) {
    l3 = {{"success", r.layer3->success}, {"consistency", r.layer3->consistency}};
    if (r.layer3->error) l3["error"] = *r.layer3->error;
  }
  Json errors = Json::array();
  for (const auto& e : r.errors) errors.push_back(to_json(e));
  return {{"scenario_id", r.scenario_id}, {"client_id", r.client_id}, {"passed", r.passed},
          {"layer1", std::move(l1)},      {"layer2", std::move(l2)},  {"layer3", std::move(l3)},
          {"errors", std::move(errors)}};
}

Json to_json(const EnvReport& r) {
  Json scenarios = Json::array();
  for (const auto& s : r.scenarios) scenarios.push_back(to_json(s));
  return {{"environment", r.environment},
          {"run_id", r.run_id},
          {"verdict", r.verdict ? "pass" : "fail"},
          {"criteria",
           {{"C1", to_json(r.c1)}, {"C2", to_json(r.c2)}, {"C3", to_json(r.c3)}, {"C4", to_json(r.c4)}}},
          {"scenarios", std::move(scenarios)}};
}

}  // namespace envsynth
