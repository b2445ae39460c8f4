// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/state.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <mutex>
#include <regex>
#include <set>
#include <unordered_map>

#include "envsynth/errors.hpp"

namespace envsynth {

namespace {

std::shared_ptr<const std::regex> compiled(const std::string& pattern) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::shared_ptr<const std::regex>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(pattern);
  if (it != cache.end()) return it->second;
  auto re = std::make_shared<const std::regex>(pattern, std::regex::ECMAScript);
  cache.emplace(pattern, re);
  return re;
}

bool kind_matches(ValueKind kind, const Json& v) {
  switch (kind) {
    case ValueKind::String: return v.is_string();
    case ValueKind::Integer:
      if (v.is_number_integer()) return true;
      if (v.is_number_float()) {
        double d = v.get<double>();
        return std::isfinite(d) && std::floor(d) == d;
      }
      return false;
    case ValueKind::Number: return v.is_number();
    case ValueKind::Boolean: return v.is_boolean();
    case ValueKind::List: return v.is_array();
    case ValueKind::Record: return v.is_object();
  }
  return false;
}

std::string record_path(const std::string& coll, const Json& record,
                        const std::string& key, std::size_t index) {
  if (record.is_object()) {
    auto it = record.find(key);
    if (it != record.end() && (it->is_string() || it->is_number_integer())) {
      return coll + "[" + key_text(*it) + "]";
    }
  }
  return coll + "[#" + std::to_string(index) + "]";
}

void check_field(const ParamSpec& spec, const Json& object, const std::string& path,
                 bool force_required, std::vector<Violation>& out) {
  auto it = object.find(spec.name);
  if (it == object.end() || it->is_null()) {
    if (spec.required || force_required) {
      out.push_back({path, "missing", "required field '" + spec.name + "' is absent"});
    }
    return;
  }
  if (auto v = check_value(spec, *it, path)) out.push_back(*std::move(v));
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// A place in the tree: member `key` of an object, or element `index` of a list.
struct Slot {
  Json* container;
  std::string key;
  std::optional<std::size_t> index;

  Json& get() const { return index ? (*container)[*index] : (*container)[key]; }
};

std::vector<std::size_t> select_indices(const Json& list, const std::string& selector,
                                        const CollectionSpec* coll) {
  std::vector<std::size_t> out;
  if (selector == "*") {
    for (std::size_t i = 0; i < list.size(); ++i) out.push_back(i);
    return out;
  }
  if (coll != nullptr) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const Json& rec = list[i];
      if (!rec.is_object()) continue;
      auto it = rec.find(coll->key);
      if (it != rec.end() && key_text(*it) == selector) out.push_back(i);
    }
    return out;
  }
  if (!selector.empty() &&
      std::all_of(selector.begin(), selector.end(),
                  [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    std::size_t idx = std::stoul(selector);
    if (idx < list.size()) out.push_back(idx);
  }
  return out;
}

std::vector<Slot> collect_slots(Json& root, const StatePath& path,
                                const ScenarioSchema& schema, std::size_t depth_limit) {
  std::vector<Json*> nodes{&root};
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < depth_limit; ++i) {
    const PathSegment& seg = path.segments[i];
    slots.clear();
    for (Json* node : nodes) {
      if (!node->is_object()) continue;
      auto it = node->find(seg.name);
      if (it == node->end()) continue;
      if (!seg.selector) {
        slots.push_back({node, seg.name, std::nullopt});
        continue;
      }
      Json& list = *it;
      if (!list.is_array()) continue;
      const CollectionSpec* coll = i == 0 ? schema.collection(seg.name) : nullptr;
      for (std::size_t idx : select_indices(list, *seg.selector, coll)) {
        slots.push_back({&list, {}, idx});
      }
    }
    nodes.clear();
    for (const Slot& s : slots) nodes.push_back(&s.get());
  }
  return slots;
}

void erase_slots(std::vector<Slot> slots) {
  // Erase list elements from the back so earlier indices stay valid.
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.container != b.container) return a.container < b.container;
    return a.index.value_or(0) > b.index.value_or(0);
  });
  for (const Slot& s : slots) {
    if (s.index) {
      s.container->erase(*s.index);
    } else {
      s.container->erase(s.key);
    }
  }
}

bool numbers_close(const Json& a, const Json& b, double tol) {
  if (a.is_number_integer() && b.is_number_integer()) {
    return a == b;
  }
  double x = a.get<double>();
  double y = b.get<double>();
  if (x == y) return true;
  return std::fabs(x - y) <= tol * std::max(std::fabs(x), std::fabs(y));
}

bool close_equal(const Json& a, const Json& b, double tol) {
  if (a.is_number() && b.is_number()) return numbers_close(a, b, tol);
  if (a.type() != b.type()) return false;
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      auto jt = b.find(it.key());
      if (jt == b.end() || !close_equal(*it, *jt, tol)) return false;
    }
    return true;
  }
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!close_equal(a[i], b[i], tol)) return false;
    }
    return true;
  }
  return a == b;
}

}  // namespace

Json ValidationReport::to_json() const {
  Json out = Json::array();
  for (const auto& v : violations) {
    out.push_back({{"path", v.path}, {"rule", v.rule}, {"message", v.message}});
  }
  return {{"ok", ok()}, {"violations", out}};
}

bool pattern_compiles(const std::string& pattern) {
  try {
    compiled(pattern);
    return true;
  } catch (const std::regex_error&) {
    return false;
  }
}

bool pattern_matches(const std::string& pattern, const std::string& text) {
  return std::regex_search(text, *compiled(pattern));
}

std::optional<Violation> check_value(const ParamSpec& spec, const Json& value,
                                     const std::string& path) {
  if (!kind_matches(spec.value_kind, value)) {
    return Violation{path, "type",
                     std::string("expected ") + to_string(spec.value_kind) + ", got " +
                         value.type_name()};
  }
  if (spec.pattern && value.is_string() &&
      !pattern_matches(*spec.pattern, value.get<std::string>())) {
    return Violation{path, "pattern",
                     "'" + value.get<std::string>() + "' does not match " + *spec.pattern};
  }
  std::optional<double> measure;
  if (value.is_number()) {
    measure = value.get<double>();
  } else if (value.is_string()) {
    measure = static_cast<double>(value.get_ref<const std::string&>().size());
  } else if (value.is_array()) {
    measure = static_cast<double>(value.size());
  }
  if (measure) {
    if (spec.min && *measure < *spec.min) {
      return Violation{path, "bounds", "value below minimum " + Json(*spec.min).dump()};
    }
    if (spec.max && *measure > *spec.max) {
      return Violation{path, "bounds", "value above maximum " + Json(*spec.max).dump()};
    }
  }
  return std::nullopt;
}

ValidationReport validate_state(const ScenarioState& state, const ScenarioSchema& schema) {
  ValidationReport report;
  auto& out = report.violations;
  if (!state.is_object()) {
    out.push_back({"", "type", "scenario state must be a record"});
    return report;
  }

  for (const auto& scalar : schema.scalars) {
    check_field(scalar, state, scalar.name, false, out);
  }

  for (const auto& [name, coll] : schema.collections) {
    auto it = state.find(name);
    if (it == state.end() || it->is_null()) {
      out.push_back({name, "missing", "collection '" + name + "' is absent"});
      continue;
    }
    if (!it->is_array()) {
      out.push_back({name, "type", "collection '" + name + "' must be a list"});
      continue;
    }
    std::set<std::string> seen_keys;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& record = (*it)[i];
      std::string rpath = record_path(name, record, coll.key, i);
      if (!record.is_object()) {
        out.push_back({rpath, "type", "collection entries must be records"});
        continue;
      }
      for (const auto& field : coll.fields) {
        check_field(field, record, rpath + "." + field.name, field.name == coll.key, out);
      }
      for (auto f = record.begin(); f != record.end(); ++f) {
        if (coll.field(f.key()) == nullptr) {
          out.push_back({rpath + "." + f.key(), "unknown-field",
                         "field '" + f.key() + "' is not declared"});
        }
      }
      auto key = record.find(coll.key);
      if (key != record.end() && !key->is_null()) {
        if (!seen_keys.insert(key->dump()).second) {
          out.push_back({rpath, "duplicate-key",
                         "key '" + key_text(*key) + "' appears more than once"});
        }
      }
    }
  }

  for (auto it = state.begin(); it != state.end(); ++it) {
    if (schema.scalar(it.key()) == nullptr && schema.collection(it.key()) == nullptr) {
      out.push_back({it.key(), "unknown-field", "field '" + it.key() + "' is not declared"});
    }
  }
  return report;
}

std::string key_text(const Json& key_value) {
  if (key_value.is_string()) return key_value.get<std::string>();
  return key_value.dump();
}

StatePath parse_path(std::string_view text) {
  StatePath path;
  path.text = std::string(text);
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    throw PathError("malformed path '" + std::string(text) + "': " + why);
  };
  if (text.empty()) fail("empty");
  while (true) {
    if (i >= text.size() || !is_ident_start(text[i])) fail("expected a field name");
    std::size_t start = i;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    PathSegment seg{std::string(text.substr(start, i - start)), std::nullopt};
    if (i < text.size() && text[i] == '[') {
      std::size_t close = text.find(']', i + 1);
      if (close == std::string_view::npos) fail("unterminated selector");
      std::string_view sel = text.substr(i + 1, close - i - 1);
      if (sel.empty() || sel.find('[') != std::string_view::npos) fail("bad selector");
      seg.selector = std::string(sel);
      i = close + 1;
    }
    path.segments.push_back(std::move(seg));
    if (i == text.size()) break;
    if (text[i] != '.') fail("unexpected character");
    ++i;
  }
  return path;
}

void remove_path(ScenarioState& state, const StatePath& path, const ScenarioSchema& schema) {
  erase_slots(collect_slots(state, path, schema, path.segments.size()));
}

StateChange change_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("path") || !doc["path"].is_string()) {
    throw ParseError("state change needs a string 'path'");
  }
  StateChange change;
  change.path = doc["path"].get<std::string>();
  if (doc.contains("set")) {
    change.op = StateChange::Op::Set;
    change.value = doc["set"];
  } else if (doc.contains("append")) {
    change.op = StateChange::Op::Append;
    change.value = doc["append"];
  } else if (doc.contains("remove")) {
    change.op = StateChange::Op::Remove;
  } else {
    throw ParseError("state change '" + change.path + "' needs one of set/append/remove");
  }
  return change;
}

Json to_json(const StateChange& change) {
  switch (change.op) {
    case StateChange::Op::Set: return {{"path", change.path}, {"set", change.value}};
    case StateChange::Op::Append: return {{"path", change.path}, {"append", change.value}};
    case StateChange::Op::Remove: return {{"path", change.path}, {"remove", true}};
  }
  return nullptr;
}

void apply_changes(ScenarioState& state, const std::vector<StateChange>& changes,
                   const ScenarioSchema& schema) {
  for (const auto& change : changes) {
    StatePath path = parse_path(change.path);
    auto slots = collect_slots(state, path, schema, path.segments.size());
    switch (change.op) {
      case StateChange::Op::Remove:
        if (slots.empty()) throw PathError("nothing to remove at '" + change.path + "'");
        erase_slots(std::move(slots));
        break;
      case StateChange::Op::Append:
        if (slots.empty()) throw PathError("no list at '" + change.path + "'");
        for (const Slot& s : slots) {
          Json& target = s.get();
          if (!target.is_array()) throw PathError("'" + change.path + "' is not a list");
          target.push_back(change.value);
        }
        break;
      case StateChange::Op::Set: {
        if (!slots.empty()) {
          for (const Slot& s : slots) s.get() = change.value;
          break;
        }
        const PathSegment& last = path.segments.back();
        if (last.selector) throw PathError("no element at '" + change.path + "'");
        std::vector<Json*> parents;
        if (path.segments.size() == 1) {
          parents.push_back(&state);
        } else {
          for (const Slot& s : collect_slots(state, path, schema, path.segments.size() - 1)) {
            parents.push_back(&s.get());
          }
        }
        if (parents.empty()) throw PathError("no parent for '" + change.path + "'");
        for (Json* p : parents) {
          if (!p->is_object()) throw PathError("parent of '" + change.path + "' is not a record");
          (*p)[last.name] = change.value;
        }
        break;
      }
    }
  }
}

Json canonical_form(const ScenarioState& state, const ScenarioSchema& schema,
                    const std::vector<std::string>& excluded_paths) {
  std::vector<StatePath> paths;
  paths.reserve(excluded_paths.size());
  for (const auto& p : excluded_paths) paths.push_back(parse_path(p));

  Json out = state;
  for (const auto& p : paths) remove_path(out, p, schema);

  if (out.is_object()) {
    for (const auto& [name, coll] : schema.collections) {
      auto it = out.find(name);
      if (it == out.end() || !it->is_array()) continue;
      const std::string& key = coll.key;
      std::vector<Json> records(it->begin(), it->end());
      std::vector<std::pair<std::string, Json>> keyed;
      keyed.reserve(records.size());
      for (auto& r : records) {
        keyed.emplace_back(r.dump(), std::move(r));
      }
      std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        const Json* ka = a.second.is_object() && a.second.contains(key) ? &a.second[key] : nullptr;
        const Json* kb = b.second.is_object() && b.second.contains(key) ? &b.second[key] : nullptr;
        if (ka && kb && *ka != *kb) return *ka < *kb;
        if (static_cast<bool>(ka) != static_cast<bool>(kb)) return kb == nullptr;
        return a.first < b.first;
      });
      Json sorted = Json::array();
      for (auto& [_, r] : keyed) sorted.push_back(std::move(r));
      *it = std::move(sorted);
    }
  }
  return out;
}

std::string canonicalize_state(const ScenarioState& state, const ScenarioSchema& schema,
                               const std::vector<std::string>& excluded_paths) {
  return canonical_form(state, schema, excluded_paths)
      .dump(-1, ' ', false, Json::error_handler_t::replace);
}

bool states_equivalent(const ScenarioState& a, const ScenarioState& b,
                       const ScenarioSchema& schema,
                       const std::vector<std::string>& excluded_paths, double rel_tolerance) {
  return close_equal(canonical_form(a, schema, excluded_paths),
                     canonical_form(b, schema, excluded_paths), rel_tolerance);
}

}  // namespace envsynth
