// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "envsynth/model.hpp"
#include "envsynth/state.hpp"
#include "envsynth/toolgraph.hpp"

namespace envsynth {

/// Outcome of an executor call for external environments: a result value and
/// the state edits to apply.
struct ExecutorReply {
  Json result;
  std::vector<StateChange> changes;
};

/// Bridge to tool implementations living outside this process.
class ExecutorAdapter {
 public:
  virtual ~ExecutorAdapter() = default;
  /// Throws ToolError for tool-level failures and RemoteError for transport
  /// failures.
  virtual ExecutorReply execute(const EnvironmentSpec& env, const ToolSpec& tool,
                                const Json& arguments, const ScenarioState& state) = 0;
};

/// Sends `{env, tool, arguments, state}` and expects `{result, changes?}` or
/// `{error: {code, message}}`.
class RemoteExecutor final : public ExecutorAdapter {
 public:
  explicit RemoteExecutor(RemoteCall call) : call_(std::move(call)) {}
  ExecutorReply execute(const EnvironmentSpec& env, const ToolSpec& tool, const Json& arguments,
                        const ScenarioState& state) override;

 private:
  RemoteCall call_;
};

struct CallRecord {
  std::string tool;
  Json arguments;
  bool ok = false;
  Json outcome;  // result, or {code, message}
};

/// Hosts environments as session-isolated executors. Sessions are keyed by
/// client_id; each holds its own scenario state, id counters and call log.
///
/// Thread-safe: the registry is guarded by a shared mutex, and each session
/// serializes its own operations. Calls on distinct sessions run in parallel.
class Runtime {
 public:
  Runtime() = default;
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  void add_environment(EnvironmentSpec env);
  std::shared_ptr<const EnvironmentSpec> environment(const std::string& name) const;
  std::vector<std::string> environment_names() const;

  /// Overrides the executor used for an environment in external mode. Without
  /// one, the environment's executor URL is used.
  void set_executor(const std::string& env, std::shared_ptr<ExecutorAdapter> executor);

  void create_session(const std::string& client_id, const std::string& env);
  void destroy_session(const std::string& client_id);
  bool has_session(const std::string& client_id) const;

  /// Validates and installs a scenario wholesale. On SchemaViolation the
  /// session is left unchanged.
  void load_scenario(const std::string& client_id, const ScenarioState& scenario);

  /// Checks arguments, runs the tool atomically and logs the call.
  Json call_tool(const std::string& client_id, const std::string& tool, const Json& arguments);

  ScenarioState save_scenario(const std::string& client_id) const;
  std::vector<CallRecord> call_log(const std::string& client_id) const;

  /// Tool interfaces (assistant and user side) without executor bindings.
  Json list_tools(const std::string& env) const;
  std::string session_environment(const std::string& client_id) const;

  /// A client id not currently in use, e.g. `replay-17`.
  std::string fresh_client_id(const std::string& prefix);

 private:
  struct Session {
    std::string client_id;
    std::shared_ptr<const EnvironmentSpec> env;
    ScenarioState state;
    bool loaded = false;
    std::map<std::string, long> counters;
    std::vector<CallRecord> log;
    mutable std::mutex mu;
  };

  std::shared_ptr<Session> find(const std::string& client_id) const;
  std::shared_ptr<ExecutorAdapter> executor_for(const EnvironmentSpec& env) const;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const EnvironmentSpec>> envs_;
  std::map<std::string, std::shared_ptr<ExecutorAdapter>> executors_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_id_{1};
};

/// Creates a session on construction and destroys it on scope exit.
class ScopedSession {
 public:
  ScopedSession(Runtime& runtime, std::string client_id, const std::string& env);
  ~ScopedSession();
  ScopedSession(const ScopedSession&) = delete;
  ScopedSession& operator=(const ScopedSession&) = delete;

  const std::string& id() const noexcept { return id_; }

 private:
  Runtime& runtime_;
  std::string id_;
};

/// Checks `arguments` against the tool's inputs and fills declared defaults.
/// Throws ToolError(InvalidArgs).
Json check_arguments(const ToolSpec& tool, const Json& arguments);

/// Runs a builtin effect against `state`, mutating it and `counters` in place.
/// Callers pass copies to get all-or-nothing semantics.
Json run_effect(const EnvironmentSpec& env, const ToolSpec& tool, const Json& arguments,
                ScenarioState& state, std::map<std::string, long>& counters);

}  // namespace envsynth
