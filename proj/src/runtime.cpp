// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/runtime.hpp"

#include <algorithm>
#include <set>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"

namespace envsynth {

namespace {

Json& collection_of(ScenarioState& state, const std::string& name) {
  Json& list = state[name];
  if (list.is_null()) list = Json::array();
  if (!list.is_array()) {
    throw ToolError(Fault::Business, "collection '" + name + "' is not a list");
  }
  return list;
}

std::ptrdiff_t find_record(const Json& list, const std::string& key, const Json& value) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    const Json& rec = list[i];
    if (rec.is_object() && rec.contains(key) && rec[key] == value) {
      return static_cast<std::ptrdiff_t>(i);
    }
  }
  return -1;
}

bool ordered_less(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return a.get<double>() < b.get<double>();
  if (a.is_string() && b.is_string()) return a.get<std::string>() < b.get<std::string>();
  return false;
}

bool predicate_holds(const Predicate& p, const Json& record, const Json& args) {
  auto arg = args.find(p.arg);
  if (arg == args.end() || arg->is_null()) return true;  // unset optional filter
  auto field = record.find(p.field);
  if (field == record.end()) return false;
  const Json& f = *field;
  const Json& a = *arg;
  switch (p.cmp) {
    case Comparator::Eq: return f == a;
    case Comparator::Ne: return f != a;
    case Comparator::Lt: return ordered_less(f, a);
    case Comparator::Le: return ordered_less(f, a) || f == a;
    case Comparator::Gt: return ordered_less(a, f);
    case Comparator::Ge: return ordered_less(a, f) || f == a;
    case Comparator::Contains:
      if (f.is_string() && a.is_string()) {
        return f.get<std::string>().find(a.get<std::string>()) != std::string::npos;
      }
      if (f.is_array()) return std::find(f.begin(), f.end(), a) != f.end();
      return false;
  }
  return false;
}

struct EffectScope {
  const Json& args;
  ScenarioState& state;
  std::map<std::string, long>& counters;
  const std::optional<std::string>& collection;
  const std::string* key_field;
  Json target;   // record the effect addressed
  Json matched = Json::array();
};

Json next_counter(EffectScope& scope, const std::string& prefix) {
  std::set<std::string> taken;
  if (scope.collection && scope.key_field) {
    auto it = scope.state.find(*scope.collection);
    if (it != scope.state.end() && it->is_array()) {
      for (const auto& rec : *it) {
        if (rec.is_object() && rec.contains(*scope.key_field)) {
          taken.insert(key_text(rec[*scope.key_field]));
        }
      }
    }
  }
  long& n = scope.counters[prefix];
  if (n < 1) n = 1;
  std::string id;
  do {
    id = prefix + std::to_string(n++);
  } while (taken.count(id));
  return id;
}

Json resolve(const ValueSource& src, EffectScope& scope) {
  using K = ValueSource::Kind;
  switch (src.kind) {
    case K::Arg: {
      auto it = scope.args.find(src.text);
      return it == scope.args.end() ? Json() : *it;
    }
    case K::Literal: return src.literal;
    case K::Counter: return next_counter(scope, src.text);
    case K::Field: {
      if (!scope.target.is_object()) return Json();
      auto it = scope.target.find(src.text);
      return it == scope.target.end() ? Json() : *it;
    }
    case K::Collect: {
      Json out = Json::array();
      for (const auto& rec : scope.matched) {
        auto it = rec.find(src.text);
        if (it != rec.end()) out.push_back(*it);
      }
      return out;
    }
    case K::Records: return scope.matched;
    case K::Count: return scope.matched.size();
    case K::State: {
      auto it = scope.state.find(src.text);
      return it == scope.state.end() ? Json() : *it;
    }
  }
  return Json();
}

Json key_argument(const EffectSpec& effect, const Json& args) {
  auto it = args.find(*effect.key_from);
  if (it == args.end() || it->is_null()) {
    throw ToolError(Fault::InvalidArgs, "missing key argument '" + *effect.key_from + "'");
  }
  return *it;
}

}  // namespace

Json check_arguments(const ToolSpec& tool, const Json& arguments) {
  if (!arguments.is_object()) {
    throw ToolError(Fault::InvalidArgs, "arguments of " + tool.name + " must be a record");
  }
  Json out = Json::object();
  for (auto it = arguments.begin(); it != arguments.end(); ++it) {
    if (tool.input(it.key()) == nullptr) {
      throw ToolError(Fault::InvalidArgs,
                      "unknown argument '" + it.key() + "' for " + tool.name);
    }
  }
  for (const auto& p : tool.inputs) {
    auto it = arguments.find(p.name);
    if (it == arguments.end() || it->is_null()) {
      if (p.default_value) {
        out[p.name] = *p.default_value;
      } else if (p.required) {
        throw ToolError(Fault::InvalidArgs,
                        "missing required argument '" + p.name + "' for " + tool.name);
      }
      continue;
    }
    if (auto v = check_value(p, *it, p.name)) {
      throw ToolError(Fault::InvalidArgs, "argument " + v->path + ": " + v->message,
                      Json{{"path", v->path}, {"rule", v->rule}});
    }
    out[p.name] = *it;
  }
  return out;
}

Json run_effect(const EnvironmentSpec& env, const ToolSpec& tool, const Json& args,
                ScenarioState& state, std::map<std::string, long>& counters) {
  if (!tool.effect) {
    throw ToolError(Fault::Business, "tool " + tool.name + " has no executor binding");
  }
  const EffectSpec& effect = *tool.effect;
  using Op = EffectSpec::Op;

  for (const auto& req : effect.requires_) {
    const CollectionSpec* coll = env.schema.collection(req.collection);
    auto arg = args.find(req.arg);
    if (arg == args.end() || arg->is_null()) continue;
    Json& list = collection_of(state, req.collection);
    if (find_record(list, coll->key, *arg) < 0) {
      throw ToolError(Fault::Business,
                      req.collection + " entry '" + key_text(*arg) + "' not found");
    }
  }

  const CollectionSpec* coll = effect.collection ? env.schema.collection(*effect.collection) : nullptr;
  EffectScope scope{args, state, counters, effect.collection, coll ? &coll->key : nullptr, Json(),
                    Json::array()};
  bool mutated = false;

  auto record_by_key = [&](Json& list) -> std::ptrdiff_t {
    Json key = key_argument(effect, args);
    std::ptrdiff_t idx = find_record(list, coll->key, key);
    if (idx < 0) {
      throw ToolError(Fault::Business, *effect.collection + " entry '" + key_text(key) + "' not found");
    }
    return idx;
  };

  switch (effect.op) {
    case Op::List:
    case Op::Filter: {
      Json& list = collection_of(state, *effect.collection);
      for (const auto& rec : list) {
        bool keep = std::all_of(effect.where.begin(), effect.where.end(),
                                [&](const Predicate& p) { return predicate_holds(p, rec, args); });
        if (keep) scope.matched.push_back(rec);
      }
      break;
    }
    case Op::Get: {
      Json& list = collection_of(state, *effect.collection);
      scope.target = list[static_cast<std::size_t>(record_by_key(list))];
      scope.matched.push_back(scope.target);
      break;
    }
    case Op::Create: {
      Json record = Json::object();
      for (const auto& [field, src] : effect.set_fields) {
        Json v = resolve(src, scope);
        if (!v.is_null()) record[field] = std::move(v);
      }
      Json& list = collection_of(state, *effect.collection);
      if (!record.contains(coll->key)) {
        throw ToolError(Fault::InvalidArgs, "new " + *effect.collection + " entry has no key");
      }
      if (find_record(list, coll->key, record[coll->key]) >= 0) {
        throw ToolError(Fault::Business, *effect.collection + " entry '" +
                                             key_text(record[coll->key]) + "' already exists");
      }
      list.push_back(record);
      scope.target = record;
      scope.matched.push_back(record);
      mutated = true;
      break;
    }
    case Op::Update: {
      Json& list = collection_of(state, *effect.collection);
      auto idx = static_cast<std::size_t>(record_by_key(list));
      for (const auto& [field, src] : effect.set_fields) {
        Json v = resolve(src, scope);
        if (!v.is_null()) list[idx][field] = std::move(v);
      }
      scope.target = list[idx];
      scope.matched.push_back(scope.target);
      mutated = true;
      break;
    }
    case Op::Delete: {
      Json& list = collection_of(state, *effect.collection);
      if (effect.key_from) {
        auto idx = static_cast<std::size_t>(record_by_key(list));
        scope.target = list[idx];
        scope.matched.push_back(scope.target);
        list.erase(idx);
      } else {
        Json kept = Json::array();
        for (auto& rec : list) {
          bool hit = std::all_of(effect.where.begin(), effect.where.end(),
                                 [&](const Predicate& p) { return predicate_holds(p, rec, args); });
          (hit ? scope.matched : kept).push_back(std::move(rec));
        }
        list = std::move(kept);
      }
      mutated = true;
      break;
    }
    case Op::Compute: {
      for (const auto& [field, src] : effect.set_fields) {
        Json v = resolve(src, scope);
        if (!v.is_null()) {
          state[field] = std::move(v);
          mutated = true;
        }
      }
      break;
    }
  }

  if (mutated) {
    ValidationReport report = validate_state(state, env.schema);
    if (!report.ok()) {
      const auto& v = report.violations.front();
      throw ToolError(Fault::InvalidArgs,
                      "call would violate the scenario schema at " + v.path + " (" + v.rule + ")",
                      report.to_json());
    }
  }

  Json result = Json::object();
  for (const auto& [name, src] : effect.returns) result[name] = resolve(src, scope);
  return result;
}

ExecutorReply RemoteExecutor::execute(const EnvironmentSpec& env, const ToolSpec& tool,
                                      const Json& arguments, const ScenarioState& state) {
  Json reply = call_({{"env", env.name}, {"tool", tool.name}, {"arguments", arguments},
                      {"state", state}});
  if (!reply.is_object()) throw RemoteError("executor reply is not a record");
  if (auto err = reply.find("error"); err != reply.end() && !err->is_null()) {
    int code = err->value("code", static_cast<int>(ErrorCode::Business));
    std::string message = err->value("message", std::string("executor error"));
    Fault fault = Fault::Business;
    switch (code) {
      case 1001: fault = Fault::UnknownTool; break;
      case 1002: fault = Fault::InvalidArgs; break;
      case 1004: fault = Fault::SchemaViolation; break;
      default: break;
    }
    throw ToolError(fault, message);
  }
  ExecutorReply out;
  out.result = reply.value("result", Json());
  if (auto ch = reply.find("changes"); ch != reply.end() && ch->is_array()) {
    for (const auto& c : *ch) {
      try {
        out.changes.push_back(change_from_json(c));
      } catch (const ParseError& e) {
        throw RemoteError(std::string("executor returned a bad state change: ") + e.what());
      }
    }
  }
  return out;
}

void Runtime::add_environment(EnvironmentSpec env) {
  std::unique_lock lock(mu_);
  std::string name = env.name;
  envs_[name] = std::make_shared<const EnvironmentSpec>(std::move(env));
}

std::shared_ptr<const EnvironmentSpec> Runtime::environment(const std::string& name) const {
  std::shared_lock lock(mu_);
  auto it = envs_.find(name);
  return it == envs_.end() ? nullptr : it->second;
}

std::vector<std::string> Runtime::environment_names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [name, _] : envs_) out.push_back(name);
  return out;
}

void Runtime::set_executor(const std::string& env, std::shared_ptr<ExecutorAdapter> executor) {
  std::unique_lock lock(mu_);
  executors_[env] = std::move(executor);
}

std::shared_ptr<ExecutorAdapter> Runtime::executor_for(const EnvironmentSpec& env) const {
  {
    std::shared_lock lock(mu_);
    auto it = executors_.find(env.name);
    if (it != executors_.end()) return it->second;
  }
  if (!env.executor_url) {
    throw ToolError(Fault::Business, "environment " + env.name + " has no executor");
  }
  return std::make_shared<RemoteExecutor>(http_remote(*env.executor_url));
}

void Runtime::create_session(const std::string& client_id, const std::string& env) {
  std::unique_lock lock(mu_);
  auto e = envs_.find(env);
  if (e == envs_.end()) throw ToolError(Fault::UnknownEnvironment, "unknown environment '" + env + "'");
  if (sessions_.count(client_id)) {
    throw ToolError(Fault::DuplicateSession, "session '" + client_id + "' already exists");
  }
  auto session = std::make_shared<Session>();
  session->client_id = client_id;
  session->env = e->second;
  sessions_.emplace(client_id, std::move(session));
}

void Runtime::destroy_session(const std::string& client_id) {
  std::unique_lock lock(mu_);
  if (sessions_.erase(client_id) == 0) {
    throw ToolError(Fault::NoSession, "no session '" + client_id + "'");
  }
}

bool Runtime::has_session(const std::string& client_id) const {
  std::shared_lock lock(mu_);
  return sessions_.count(client_id) > 0;
}

std::shared_ptr<Runtime::Session> Runtime::find(const std::string& client_id) const {
  std::shared_lock lock(mu_);
  auto it = sessions_.find(client_id);
  if (it == sessions_.end()) throw ToolError(Fault::NoSession, "no session '" + client_id + "'");
  return it->second;
}

void Runtime::load_scenario(const std::string& client_id, const ScenarioState& scenario) {
  auto session = find(client_id);
  std::lock_guard lock(session->mu);
  ValidationReport report = validate_state(scenario, session->env->schema);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw ToolError(Fault::SchemaViolation,
                    "scenario rejected: " + v.path + " (" + v.rule + "): " + v.message,
                    report.to_json());
  }
  session->state = scenario;
  session->counters.clear();
  session->loaded = true;
}

Json Runtime::call_tool(const std::string& client_id, const std::string& tool_name,
                        const Json& arguments) {
  auto session = find(client_id);
  std::lock_guard lock(session->mu);
  if (!session->loaded) {
    throw ToolError(Fault::NotLoaded, "session '" + client_id + "' has no scenario loaded");
  }
  const EnvironmentSpec& env = *session->env;
  CallRecord record{tool_name, arguments, false, Json()};
  try {
    const ToolSpec* tool = env.tool(tool_name);
    if (tool == nullptr) throw ToolError(Fault::UnknownTool, "unknown tool '" + tool_name + "'");
    Json args = check_arguments(*tool, arguments);

    ScenarioState next = session->state;
    auto counters = session->counters;
    Json result;
    if (env.executor_mode == ExecutorMode::Builtin) {
      result = run_effect(env, *tool, args, next, counters);
    } else {
      ExecutorReply reply = executor_for(env)->execute(env, *tool, args, next);
      try {
        apply_changes(next, reply.changes, env.schema);
      } catch (const PathError& e) {
        throw ToolError(Fault::Business, std::string("executor state change failed: ") + e.what());
      }
      ValidationReport report = validate_state(next, env.schema);
      if (!report.ok()) {
        throw ToolError(Fault::InvalidArgs, "executor produced a state that violates the schema",
                        report.to_json());
      }
      result = std::move(reply.result);
    }
    session->state = std::move(next);
    session->counters = std::move(counters);
    record.ok = true;
    record.outcome = result;
    session->log.push_back(std::move(record));
    return result;
  } catch (const ToolError& e) {
    record.outcome = {{"code", e.code()}, {"message", e.what()}};
    session->log.push_back(std::move(record));
    throw;
  }
}

ScenarioState Runtime::save_scenario(const std::string& client_id) const {
  auto session = find(client_id);
  std::lock_guard lock(session->mu);
  if (!session->loaded) {
    throw ToolError(Fault::NotLoaded, "session '" + client_id + "' has no scenario loaded");
  }
  return session->state;
}

std::vector<CallRecord> Runtime::call_log(const std::string& client_id) const {
  auto session = find(client_id);
  std::lock_guard lock(session->mu);
  return session->log;
}

Json Runtime::list_tools(const std::string& env_name) const {
  auto env = environment(env_name);
  if (!env) throw ToolError(Fault::UnknownEnvironment, "unknown environment '" + env_name + "'");
  Json tools = Json::array();
  for (const auto& t : env->tools) tools.push_back(to_json(t, false));
  return tools;
}

std::string Runtime::session_environment(const std::string& client_id) const {
  return find(client_id)->env->name;
}

std::string Runtime::fresh_client_id(const std::string& prefix) {
  while (true) {
    std::string id = prefix + "-" + std::to_string(next_id_.fetch_add(1));
    if (!has_session(id)) return id;
  }
}

ScopedSession::ScopedSession(Runtime& runtime, std::string client_id, const std::string& env)
    : runtime_(runtime), id_(std::move(client_id)) {
  runtime_.create_session(id_, env);
}

ScopedSession::~ScopedSession() {
  try {
    runtime_.destroy_session(id_);
  } catch (const ToolError&) {
    // already destroyed by the caller
  }
}

}  // namespace envsynth
