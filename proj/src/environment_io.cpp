// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/environment_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "envsynth/errors.hpp"
#include "envsynth/state.hpp"

namespace envsynth {

namespace {

void allow_keys(const Json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(),
                     [&](const char* k) { return it.key() == k; })) {
      throw SpecError(path + "." + it.key(), "unknown key");
    }
  }
}

const Json& require_object(const Json& v, const std::string& path) {
  if (!v.is_object()) throw SpecError(path, "expected a record");
  return v;
}

const Json& require_array(const Json& v, const std::string& path) {
  if (!v.is_array()) throw SpecError(path, "expected a list");
  return v;
}

std::string get_string(const Json& obj, const char* key, const std::string& path,
                       bool required, std::string fallback = {}) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw SpecError(path + "." + key, "missing");
    return fallback;
  }
  if (!it->is_string()) throw SpecError(path + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<std::string> get_string_list(const Json& obj, const char* key,
                                         const std::string& path) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  require_array(*it, path + "." + key);
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_string()) {
      throw SpecError(path + "." + key + "[" + std::to_string(i) + "]", "expected a string");
    }
    out.push_back((*it)[i].get<std::string>());
  }
  return out;
}

std::vector<ParamSpec> param_list(const Json& obj, const char* key, const std::string& path) {
  std::vector<ParamSpec> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  std::string lpath = path + "." + key;
  require_array(*it, lpath);
  std::set<std::string> names;
  for (std::size_t i = 0; i < it->size(); ++i) {
    std::string ppath = lpath + "[" + std::to_string(i) + "]";
    ParamSpec p = param_from_json((*it)[i], ppath);
    if (!names.insert(p.name).second) {
      throw SpecError(ppath + ".name", "duplicate parameter name '" + p.name + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

ValueSource source_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  if (doc.size() != 1) throw SpecError(path, "value source needs exactly one key");
  auto it = doc.begin();
  const std::string& k = it.key();
  ValueSource src;
  auto text = [&]() {
    if (!it->is_string()) throw SpecError(path + "." + k, "expected a string");
    return it->get<std::string>();
  };
  if (k == "arg") {
    src.kind = ValueSource::Kind::Arg;
    src.text = text();
  } else if (k == "literal") {
    src.kind = ValueSource::Kind::Literal;
    src.literal = *it;
  } else if (k == "counter") {
    src.kind = ValueSource::Kind::Counter;
    src.text = text();
  } else if (k == "field") {
    src.kind = ValueSource::Kind::Field;
    src.text = text();
  } else if (k == "collect") {
    src.kind = ValueSource::Kind::Collect;
    src.text = text();
  } else if (k == "records") {
    src.kind = ValueSource::Kind::Records;
  } else if (k == "count") {
    src.kind = ValueSource::Kind::Count;
  } else if (k == "state") {
    src.kind = ValueSource::Kind::State;
    src.text = text();
  } else {
    throw SpecError(path + "." + k, "unknown value source");
  }
  return src;
}

Json source_to_json(const ValueSource& src) {
  switch (src.kind) {
    case ValueSource::Kind::Arg: return {{"arg", src.text}};
    case ValueSource::Kind::Literal: return {{"literal", src.literal}};
    case ValueSource::Kind::Counter: return {{"counter", src.text}};
    case ValueSource::Kind::Field: return {{"field", src.text}};
    case ValueSource::Kind::Collect: return {{"collect", src.text}};
    case ValueSource::Kind::Records: return {{"records", true}};
    case ValueSource::Kind::Count: return {{"count", true}};
    case ValueSource::Kind::State: return {{"state", src.text}};
  }
  return nullptr;
}

std::optional<EffectSpec::Op> op_from(const std::string& s) {
  for (auto op : {EffectSpec::Op::List, EffectSpec::Op::Get, EffectSpec::Op::Filter,
                  EffectSpec::Op::Create, EffectSpec::Op::Update, EffectSpec::Op::Delete,
                  EffectSpec::Op::Compute}) {
    if (s == to_string(op)) return op;
  }
  return std::nullopt;
}

std::optional<Comparator> cmp_from(const std::string& s) {
  for (auto c : {Comparator::Eq, Comparator::Ne, Comparator::Lt, Comparator::Le,
                 Comparator::Gt, Comparator::Ge, Comparator::Contains}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

EffectSpec effect_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  allow_keys(doc, path, {"op", "collection", "key_from", "set_fields", "where", "requires", "returns"});
  EffectSpec e;
  std::string op = get_string(doc, "op", path, true);
  auto parsed = op_from(op);
  if (!parsed) throw SpecError(path + ".op", "unknown effect op '" + op + "'");
  e.op = *parsed;
  if (doc.contains("collection")) e.collection = get_string(doc, "collection", path, true);
  if (doc.contains("key_from")) e.key_from = get_string(doc, "key_from", path, true);
  if (auto it = doc.find("set_fields"); it != doc.end()) {
    require_object(*it, path + ".set_fields");
    for (auto f = it->begin(); f != it->end(); ++f) {
      e.set_fields[f.key()] = source_from_json(*f, path + ".set_fields." + f.key());
    }
  }
  if (auto it = doc.find("where"); it != doc.end()) {
    require_array(*it, path + ".where");
    for (std::size_t i = 0; i < it->size(); ++i) {
      std::string wpath = path + ".where[" + std::to_string(i) + "]";
      const Json& w = require_object((*it)[i], wpath);
      allow_keys(w, wpath, {"field", "cmp", "arg"});
      Predicate p;
      p.field = get_string(w, "field", wpath, true);
      p.arg = get_string(w, "arg", wpath, true);
      std::string cmp = get_string(w, "cmp", wpath, false, "eq");
      auto c = cmp_from(cmp);
      if (!c) throw SpecError(wpath + ".cmp", "unknown comparator '" + cmp + "'");
      p.cmp = *c;
      e.where.push_back(std::move(p));
    }
  }
  if (auto it = doc.find("requires"); it != doc.end()) {
    require_array(*it, path + ".requires");
    for (std::size_t i = 0; i < it->size(); ++i) {
      std::string rpath = path + ".requires[" + std::to_string(i) + "]";
      const Json& r = require_object((*it)[i], rpath);
      allow_keys(r, rpath, {"collection", "arg"});
      e.requires_.push_back({get_string(r, "collection", rpath, true),
                             get_string(r, "arg", rpath, true)});
    }
  }
  if (auto it = doc.find("returns"); it != doc.end()) {
    require_object(*it, path + ".returns");
    for (auto f = it->begin(); f != it->end(); ++f) {
      e.returns[f.key()] = source_from_json(*f, path + ".returns." + f.key());
    }
  }
  return e;
}

void check_effect(const EffectSpec& e, const ToolSpec& tool, const ScenarioSchema& schema,
                  const std::string& path) {
  using Op = EffectSpec::Op;
  const CollectionSpec* coll = nullptr;
  if (e.collection) {
    coll = schema.collection(*e.collection);
    if (coll == nullptr) {
      throw SpecError(path + ".collection", "unknown collection '" + *e.collection + "'");
    }
  } else if (e.op != Op::Compute) {
    throw SpecError(path + ".collection", std::string("op '") + to_string(e.op) +
                                              "' needs a collection");
  }
  if (e.key_from && tool.input(*e.key_from) == nullptr) {
    throw SpecError(path + ".key_from", "'" + *e.key_from + "' is not an input of the tool");
  }
  if ((e.op == Op::Get || e.op == Op::Update) && !e.key_from) {
    throw SpecError(path + ".key_from", std::string("op '") + to_string(e.op) +
                                            "' needs key_from");
  }
  auto check_source = [&](const ValueSource& src, const std::string& spath, bool is_return) {
    using K = ValueSource::Kind;
    switch (src.kind) {
      case K::Arg:
        if (tool.input(src.text) == nullptr) {
          throw SpecError(spath, "'" + src.text + "' is not an input of the tool");
        }
        break;
      case K::Field:
      case K::Collect:
        if (coll == nullptr || coll->field(src.text) == nullptr) {
          throw SpecError(spath, "'" + src.text + "' is not a field of the effect collection");
        }
        break;
      case K::Records:
      case K::Count:
        if (coll == nullptr) throw SpecError(spath, "needs a collection");
        break;
      case K::State:
        if (schema.scalar(src.text) == nullptr) {
          throw SpecError(spath, "'" + src.text + "' is not a scenario scalar");
        }
        break;
      case K::Counter:
        if (src.text.empty()) throw SpecError(spath, "counter needs a prefix");
        break;
      case K::Literal:
        break;
    }
    (void)is_return;
  };
  for (const auto& [field, src] : e.set_fields) {
    std::string spath = path + ".set_fields." + field;
    if (e.op == Op::Compute) {
      if (schema.scalar(field) == nullptr) throw SpecError(spath, "not a scenario scalar");
    } else if (coll == nullptr || coll->field(field) == nullptr) {
      throw SpecError(spath, "not a field of the effect collection");
    }
    check_source(src, spath, false);
  }
  for (std::size_t i = 0; i < e.where.size(); ++i) {
    std::string wpath = path + ".where[" + std::to_string(i) + "]";
    if (coll == nullptr || coll->field(e.where[i].field) == nullptr) {
      throw SpecError(wpath + ".field", "not a field of the effect collection");
    }
    if (tool.input(e.where[i].arg) == nullptr) {
      throw SpecError(wpath + ".arg", "not an input of the tool");
    }
  }
  for (std::size_t i = 0; i < e.requires_.size(); ++i) {
    std::string rpath = path + ".requires[" + std::to_string(i) + "]";
    if (schema.collection(e.requires_[i].collection) == nullptr) {
      throw SpecError(rpath + ".collection", "unknown collection");
    }
    if (tool.input(e.requires_[i].arg) == nullptr) {
      throw SpecError(rpath + ".arg", "not an input of the tool");
    }
  }
  for (const auto& out : tool.outputs) {
    if (!e.returns.count(out.name)) {
      throw SpecError(path + ".returns." + out.name, "declared output has no return source");
    }
  }
  for (const auto& [name, src] : e.returns) {
    if (tool.output(name) == nullptr) {
      throw SpecError(path + ".returns." + name, "not a declared output of the tool");
    }
    check_source(src, path + ".returns." + name, true);
  }
}

ScenarioSchema schema_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  allow_keys(doc, path, {"collections", "scalars"});
  ScenarioSchema schema;
  if (auto it = doc.find("collections"); it != doc.end()) {
    require_object(*it, path + ".collections");
    for (auto c = it->begin(); c != it->end(); ++c) {
      std::string cpath = path + ".collections." + c.key();
      require_object(*c, cpath);
      allow_keys(*c, cpath, {"key", "fields"});
      CollectionSpec coll;
      coll.key = get_string(*c, "key", cpath, true);
      coll.fields = param_list(*c, "fields", cpath);
      if (coll.field(coll.key) == nullptr) {
        throw SpecError(cpath + ".key", "key field '" + coll.key + "' is not declared");
      }
      schema.collections.emplace(c.key(), std::move(coll));
    }
  }
  schema.scalars = param_list(doc, "scalars", path);
  for (std::size_t i = 0; i < schema.scalars.size(); ++i) {
    auto& s = schema.scalars[i];
    if (schema.collections.count(s.name)) {
      throw SpecError(path + ".scalars[" + std::to_string(i) + "].name",
                      "name collides with a collection");
    }
    if (s.name == "current_time") {
      if (s.value_kind != ValueKind::String) {
        throw SpecError(path + ".scalars[" + std::to_string(i) + "].value_kind",
                        "current_time must be a string");
      }
      if (!s.pattern) s.pattern = kIsoDateTimePattern;
    }
  }
  return schema;
}

Json params_to_json(const std::vector<ParamSpec>& params) {
  Json out = Json::array();
  for (const auto& p : params) out.push_back(to_json(p));
  return out;
}

}  // namespace

Json parse_json_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ParseError(e.what());
  }
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

ParamSpec param_from_json(const Json& doc, const std::string& path) {
  require_object(doc, path);
  allow_keys(doc, path, {"name", "description", "value_kind", "required", "default", "pattern",
                         "min", "max", "classification_hint"});
  ParamSpec p;
  p.name = get_string(doc, "name", path, true);
  if (p.name.empty()) throw SpecError(path + ".name", "must be non-empty");
  p.description = get_string(doc, "description", path, false);
  std::string kind = get_string(doc, "value_kind", path, false, "string");
  auto vk = value_kind_from(kind);
  if (!vk) throw SpecError(path + ".value_kind", "unknown value kind '" + kind + "'");
  p.value_kind = *vk;
  if (auto it = doc.find("required"); it != doc.end()) {
    if (!it->is_boolean()) throw SpecError(path + ".required", "expected a boolean");
    p.required = it->get<bool>();
  } else if (doc.contains("default")) {
    p.required = false;
  }
  if (auto it = doc.find("pattern"); it != doc.end()) {
    p.pattern = get_string(doc, "pattern", path, true);
    if (p.value_kind != ValueKind::String) {
      throw SpecError(path + ".pattern", "pattern only applies to strings");
    }
    if (!pattern_compiles(*p.pattern)) throw SpecError(path + ".pattern", "invalid regular expression");
  }
  for (const char* bound : {"min", "max"}) {
    if (auto it = doc.find(bound); it != doc.end()) {
      if (!it->is_number()) throw SpecError(path + "." + bound, "expected a number");
      (std::string(bound) == "min" ? p.min : p.max) = it->get<double>();
    }
  }
  if (p.min && p.max && *p.min > *p.max) throw SpecError(path + ".min", "min exceeds max");
  if (auto it = doc.find("classification_hint"); it != doc.end()) {
    std::string hint = get_string(doc, "classification_hint", path, true);
    auto cls = param_class_from(hint);
    if (!cls) throw SpecError(path + ".classification_hint", "expected internal or external");
    p.classification_hint = *cls;
  }
  if (auto it = doc.find("default"); it != doc.end()) {
    if (p.required) throw SpecError(path + ".default", "a parameter with a default cannot be required");
    if (auto v = check_value(p, *it, path + ".default")) {
      throw SpecError(path + ".default", v->message);
    }
    p.default_value = *it;
  }
  return p;
}

Json to_json(const ParamSpec& p) {
  Json out = {{"name", p.name},
              {"description", p.description},
              {"value_kind", to_string(p.value_kind)},
              {"required", p.required}};
  if (p.default_value) out["default"] = *p.default_value;
  if (p.pattern) out["pattern"] = *p.pattern;
  if (p.min) out["min"] = *p.min;
  if (p.max) out["max"] = *p.max;
  if (p.classification_hint) out["classification_hint"] = to_string(*p.classification_hint);
  return out;
}

Json to_json(const EffectSpec& e) {
  Json out = {{"op", to_string(e.op)}};
  if (e.collection) out["collection"] = *e.collection;
  if (e.key_from) out["key_from"] = *e.key_from;
  if (!e.set_fields.empty()) {
    Json sf = Json::object();
    for (const auto& [k, v] : e.set_fields) sf[k] = source_to_json(v);
    out["set_fields"] = sf;
  }
  if (!e.where.empty()) {
    Json w = Json::array();
    for (const auto& p : e.where) {
      w.push_back({{"field", p.field}, {"cmp", to_string(p.cmp)}, {"arg", p.arg}});
    }
    out["where"] = w;
  }
  if (!e.requires_.empty()) {
    Json r = Json::array();
    for (const auto& q : e.requires_) r.push_back({{"collection", q.collection}, {"arg", q.arg}});
    out["requires"] = r;
  }
  Json ret = Json::object();
  for (const auto& [k, v] : e.returns) ret[k] = source_to_json(v);
  out["returns"] = ret;
  return out;
}

Json to_json(const ToolSpec& t, bool include_effect) {
  Json out = {{"name", t.name},
              {"description", t.description},
              {"side", to_string(t.side)},
              {"inputs", params_to_json(t.inputs)},
              {"outputs", params_to_json(t.outputs)}};
  if (include_effect && t.effect) out["effect"] = to_json(*t.effect);
  return out;
}

Json to_json(const ScenarioSchema& schema) {
  Json colls = Json::object();
  for (const auto& [name, c] : schema.collections) {
    colls[name] = {{"key", c.key}, {"fields", params_to_json(c.fields)}};
  }
  return {{"collections", colls}, {"scalars", params_to_json(schema.scalars)}};
}

Json to_json(const EnvironmentSpec& env) {
  Json meta = {{"description", env.metadata.description},
               {"domain", env.metadata.domain},
               {"version", env.metadata.version}};
  if (env.metadata.tools) {
    Json sigs = Json::array();
    for (const auto& s : *env.metadata.tools) {
      sigs.push_back({{"name", s.name}, {"inputs", s.inputs}, {"outputs", s.outputs}});
    }
    meta["tools"] = sigs;
  }
  Json tools = Json::array();
  for (const auto& t : env.tools) tools.push_back(to_json(t));
  Json out = {{"name", env.name},
              {"metadata", meta},
              {"schema", to_json(env.schema)},
              {"executor_mode", to_string(env.executor_mode)},
              {"tools", tools}};
  if (env.executor_url) out["executor"] = {{"url", *env.executor_url}};
  return out;
}

std::string serialize_environment(const EnvironmentSpec& env) {
  return to_json(env).dump(2) + "\n";
}

EnvironmentSpec environment_from_json(const Json& doc) {
  const std::string root = "$";
  require_object(doc, root);
  allow_keys(doc, root, {"name", "metadata", "schema", "tools", "executor_mode", "executor"});
  EnvironmentSpec env;
  env.name = get_string(doc, "name", root, true);
  if (env.name.empty()) throw SpecError("name", "environment name must be non-empty");

  if (auto it = doc.find("metadata"); it != doc.end()) {
    require_object(*it, "metadata");
    allow_keys(*it, "metadata", {"description", "domain", "version", "tools"});
    env.metadata.description = get_string(*it, "description", "metadata", false);
    env.metadata.domain = get_string(*it, "domain", "metadata", false);
    env.metadata.version = get_string(*it, "version", "metadata", false);
    if (auto t = it->find("tools"); t != it->end()) {
      require_array(*t, "metadata.tools");
      std::vector<ToolSignature> sigs;
      for (std::size_t i = 0; i < t->size(); ++i) {
        std::string spath = "metadata.tools[" + std::to_string(i) + "]";
        const Json& s = require_object((*t)[i], spath);
        allow_keys(s, spath, {"name", "inputs", "outputs"});
        sigs.push_back({get_string(s, "name", spath, true), get_string_list(s, "inputs", spath),
                        get_string_list(s, "outputs", spath)});
      }
      env.metadata.tools = std::move(sigs);
    }
  }

  if (auto it = doc.find("schema"); it != doc.end()) {
    env.schema = schema_from_json(*it, "schema");
  }

  std::string mode = get_string(doc, "executor_mode", root, false, "builtin");
  if (mode == "builtin") {
    env.executor_mode = ExecutorMode::Builtin;
  } else if (mode == "external") {
    env.executor_mode = ExecutorMode::External;
  } else {
    throw SpecError("executor_mode", "expected builtin or external");
  }
  if (auto it = doc.find("executor"); it != doc.end()) {
    require_object(*it, "executor");
    allow_keys(*it, "executor", {"url"});
    env.executor_url = get_string(*it, "url", "executor", true);
  }

  if (auto it = doc.find("tools"); it != doc.end()) {
    require_array(*it, "tools");
    std::set<std::string> names;
    for (std::size_t i = 0; i < it->size(); ++i) {
      std::string tpath = "tools[" + std::to_string(i) + "]";
      const Json& t = require_object((*it)[i], tpath);
      allow_keys(t, tpath, {"name", "description", "side", "inputs", "outputs", "effect"});
      ToolSpec tool;
      tool.name = get_string(t, "name", tpath, true);
      if (tool.name.empty()) throw SpecError(tpath + ".name", "must be non-empty");
      if (!names.insert(tool.name).second) {
        throw SpecError(tpath + ".name", "duplicate tool name '" + tool.name + "'");
      }
      tool.description = get_string(t, "description", tpath, false);
      std::string side = get_string(t, "side", tpath, false, "assistant");
      if (side == "assistant") {
        tool.side = Side::Assistant;
      } else if (side == "user") {
        tool.side = Side::User;
      } else {
        throw SpecError(tpath + ".side", "expected assistant or user");
      }
      tool.inputs = param_list(t, "inputs", tpath);
      tool.outputs = param_list(t, "outputs", tpath);
      if (auto e = t.find("effect"); e != t.end()) {
        tool.effect = effect_from_json(*e, tpath + ".effect");
        check_effect(*tool.effect, tool, env.schema, tpath + ".effect");
      }
      if (env.executor_mode == ExecutorMode::Builtin && tool.side == Side::Assistant &&
          !tool.effect) {
        throw SpecError(tpath + ".effect", "builtin environments need an effect on every assistant tool");
      }
      env.tools.push_back(std::move(tool));
    }
  }
  return env;
}

EnvironmentSpec parse_environment(std::string_view text) {
  return environment_from_json(parse_json_text(text));
}

EnvironmentSpec load_environment_file(const std::filesystem::path& file) {
  return parse_environment(read_text_file(file));
}

std::vector<EnvironmentSpec> load_environment_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw ParseError("not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<EnvironmentSpec> envs;
  std::set<std::string> names;
  for (const auto& f : files) {
    try {
      envs.push_back(load_environment_file(f));
    } catch (const SpecError& e) {
      throw SpecError(f.filename().string() + ":" + e.path(), e.what());
    }
    if (!names.insert(envs.back().name).second) {
      throw SpecError(f.filename().string() + ":name", "duplicate environment name");
    }
  }
  if (envs.empty()) throw ParseError("no environment files in " + dir.string());
  std::sort(envs.begin(), envs.end(),
            [](const auto& a, const auto& b) { return a.name < b.name; });
  return envs;
}

// ---------------------------------------------------------------------------

TrajectoryRecord trajectory_from_json(const Json& doc, const EnvironmentSpec* env) {
  require_object(doc, "$");
  TrajectoryRecord traj;
  traj.environment = get_string(doc, "environment", "$", true);
  if (env != nullptr && env->name != traj.environment) {
    throw SpecError("environment", "trajectory targets '" + traj.environment +
                                       "', expected '" + env->name + "'");
  }
  auto turns = doc.find("turns");
  if (turns == doc.end()) return traj;
  require_array(*turns, "turns");
  for (std::size_t ti = 0; ti < turns->size(); ++ti) {
    std::string tpath = "turns[" + std::to_string(ti) + "]";
    const Json& t = require_object((*turns)[ti], tpath);
    Turn turn;
    if (auto q = t.find("user_query"); q != t.end() && !q->is_null()) {
      turn.user_query = get_string(t, "user_query", tpath, true);
    }
    if (auto steps = t.find("steps"); steps != t.end()) {
      require_array(*steps, tpath + ".steps");
      for (std::size_t si = 0; si < steps->size(); ++si) {
        std::string spath = tpath + ".steps[" + std::to_string(si) + "]";
        const Json& s = require_object((*steps)[si], spath);
        std::string kind = get_string(s, "kind", spath, true);
        if (kind == "tool_call") {
          ToolCallStep call;
          call.tool = get_string(s, "tool", spath, true);
          if (env != nullptr && env->tool(call.tool) == nullptr) {
            throw SpecError(spath + ".tool", "unknown tool '" + call.tool + "'");
          }
          if (auto a = s.find("arguments"); a != s.end()) {
            call.arguments = require_object(*a, spath + ".arguments");
          }
          call.masked_args = get_string_list(s, "masked_args", spath);
          for (const auto& m : call.masked_args) {
            if (!call.arguments.contains(m)) {
              throw SpecError(spath + ".masked_args", "'" + m + "' is not an argument of the call");
            }
          }
          if (auto r = s.find("result"); r != s.end()) call.result = *r;
          if (auto b = s.find("block"); b != s.end()) {
            if (!b->is_number_integer()) throw SpecError(spath + ".block", "expected an integer");
            call.block = b->get<int>();
          }
          turn.steps.emplace_back(std::move(call));
        } else if (kind == "message") {
          MessageStep msg;
          std::string role = get_string(s, "role", spath, false, "assistant");
          if (role == "assistant") {
            msg.role = Side::Assistant;
          } else if (role == "user") {
            msg.role = Side::User;
          } else {
            throw SpecError(spath + ".role", "expected assistant or user");
          }
          msg.text = get_string(s, "text", spath, false);
          turn.steps.emplace_back(std::move(msg));
        } else {
          throw SpecError(spath + ".kind", "expected tool_call or message");
        }
      }
    }
    traj.turns.push_back(std::move(turn));
  }
  return traj;
}

TrajectoryRecord parse_trajectory(std::string_view text, const EnvironmentSpec* env) {
  return trajectory_from_json(parse_json_text(text), env);
}

Json to_json(const TrajectoryRecord& traj) {
  Json turns = Json::array();
  for (const auto& turn : traj.turns) {
    Json t = Json::object();
    if (turn.user_query) t["user_query"] = *turn.user_query;
    Json steps = Json::array();
    for (const auto& step : turn.steps) {
      if (const auto* call = std::get_if<ToolCallStep>(&step)) {
        Json s = {{"kind", "tool_call"}, {"tool", call->tool}, {"arguments", call->arguments}};
        if (!call->masked_args.empty()) s["masked_args"] = call->masked_args;
        if (call->result) s["result"] = *call->result;
        if (call->block) s["block"] = *call->block;
        steps.push_back(std::move(s));
      } else {
        const auto& msg = std::get<MessageStep>(step);
        steps.push_back({{"kind", "message"}, {"role", to_string(msg.role)}, {"text", msg.text}});
      }
    }
    t["steps"] = steps;
    turns.push_back(std::move(t));
  }
  return {{"environment", traj.environment}, {"turns", turns}};
}

std::string serialize_trajectory(const TrajectoryRecord& traj) {
  return to_json(traj).dump(2) + "\n";
}

}  // namespace envsynth
