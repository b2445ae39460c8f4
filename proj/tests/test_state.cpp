// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <regex>
#include <set>
#include <tuple>

#include "envsynth/errors.hpp"
#include "envsynth/state.hpp"
#include "support.hpp"

namespace envsynth {
namespace {

using testing::travel_env;
using testing::travel_scenario;

bool has_rule(const ValidationReport& r, const std::string& path, const std::string& rule) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.path == path && v.rule == rule; });
}

TEST(ValidateState, FixtureScenarioIsClean) {
  auto env = travel_env();
  EXPECT_TRUE(validate_state(travel_scenario(), env.schema).ok());
}

TEST(ValidateState, IsoTimeWithoutZoneAccepted) {
  auto env = travel_env();
  auto s = travel_scenario();
  s["current_time"] = "2024-05-01T09:00:00";
  EXPECT_EQ(validate_state(s, env.schema).violations.size(), 0u);
}

TEST(ValidateState, ClockTimeIsPatternViolation) {
  auto env = travel_env();
  auto s = travel_scenario();
  s["current_time"] = "9am";
  auto r = validate_state(s, env.schema);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].path, "current_time");
  EXPECT_EQ(r.violations[0].rule, "pattern");
}

TEST(ValidateState, DuplicateKeyReportedOnce) {
  auto env = travel_env();
  auto s = travel_scenario();
  Json copy = s["hotels"][0];
  copy["name"] = "Other";
  s["hotels"].push_back(copy);
  auto r = validate_state(s, env.schema);
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0].rule, "duplicate-key");
  EXPECT_EQ(r.violations[0].path, "hotels[H1]");
}

TEST(ValidateState, EachRuleHasItsPath) {
  auto env = travel_env();
  auto s = travel_scenario();
  s["hotels"][1].erase("city");
  s["hotels"][2]["price_per_night"] = 10000.5;
  s["hotels"][0]["stars"] = 4;
  s["bookings"].push_back({{"booking_id", "X9"}, {"hotel_id", "H1"}, {"guest_name", "A"}});
  s["mood"] = "good";
  auto r = validate_state(s, env.schema);
  EXPECT_EQ(r.violations.size(), 5u);
  EXPECT_TRUE(has_rule(r, "hotels[H2].city", "missing"));
  EXPECT_TRUE(has_rule(r, "hotels[H3].price_per_night", "bounds"));
  EXPECT_TRUE(has_rule(r, "hotels[H1].stars", "unknown-field"));
  EXPECT_TRUE(has_rule(r, "bookings[X9].booking_id", "pattern"));
  EXPECT_TRUE(has_rule(r, "mood", "unknown-field"));
}

TEST(ValidateState, MissingCollectionAndWrongTypes) {
  auto env = travel_env();
  auto s = travel_scenario();
  s.erase("notes");
  s["weather"] = "sunny";
  s["hotels"][0]["price_per_night"] = "cheap";
  auto r = validate_state(s, env.schema);
  EXPECT_EQ(r.violations.size(), 3u);
  EXPECT_TRUE(has_rule(r, "notes", "missing"));
  EXPECT_TRUE(has_rule(r, "weather", "type"));
  EXPECT_TRUE(has_rule(r, "hotels[H1].price_per_night", "type"));
  EXPECT_FALSE(validate_state(Json::array(), env.schema).ok());
}

TEST(ValidateState, ReportSerializesEveryViolation) {
  auto env = travel_env();
  auto s = travel_scenario();
  s["current_time"] = "9am";
  Json j = validate_state(s, env.schema).to_json();
  EXPECT_EQ(j["ok"], false);
  ASSERT_EQ(j["violations"].size(), 1u);
  EXPECT_EQ(j["violations"][0]["rule"], "pattern");
}

// Reference checker written straight from the rule list, scoped to the
// fixture schema. Returns sorted (path, rule) pairs.
std::vector<std::pair<std::string, std::string>> naive_violations(const Json& s) {
  std::vector<std::pair<std::string, std::string>> out;
  auto str_field = [&](const Json& rec, const std::string& path, const std::string& f,
                       bool required, const char* pattern, int min_len) {
    if (!rec.contains(f) || rec[f].is_null()) {
      if (required) out.emplace_back(path + "." + f, "missing");
      return;
    }
    const Json& v = rec[f];
    if (!v.is_string()) return out.emplace_back(path + "." + f, "type"), void();
    std::string t = v.get<std::string>();
    if (pattern && !std::regex_search(t, std::regex(pattern))) {
      return out.emplace_back(path + "." + f, "pattern"), void();
    }
    if (static_cast<int>(t.size()) < min_len) out.emplace_back(path + "." + f, "bounds");
  };
  struct Field {
    std::string name;
    const char* pattern;
    int min_len;
    bool numeric;
  };
  const std::vector<std::tuple<std::string, std::string, std::vector<Field>>> colls = {
      {"bookings", "booking_id",
       {{"booking_id", "^B[0-9]+$", 0, false},
        {"hotel_id", "^H[0-9]+$", 0, false},
        {"guest_name", nullptr, 1, false}}},
      {"hotels", "hotel_id",
       {{"hotel_id", "^H[0-9]+$", 0, false},
        {"name", nullptr, 1, false},
        {"city", nullptr, 1, false},
        {"price_per_night", nullptr, 0, true}}},
      {"notes", "note_id", {{"note_id", nullptr, 0, false}, {"text", nullptr, 0, false}}},
      {"weather", "city", {{"city", nullptr, 1, false}, {"forecast", nullptr, 0, false}}},
  };
  if (!s.contains("current_time")) {
    out.emplace_back("current_time", "missing");
  } else if (!s["current_time"].is_string()) {
    out.emplace_back("current_time", "type");
  } else if (!std::regex_search(s["current_time"].get<std::string>(),
                                std::regex(kIsoDateTimePattern))) {
    out.emplace_back("current_time", "pattern");
  }
  for (const auto& [name, key, fields] : colls) {
    if (!s.contains(name)) {
      out.emplace_back(name, "missing");
      continue;
    }
    std::set<std::string> keys;
    for (std::size_t i = 0; i < s[name].size(); ++i) {
      const Json& rec = s[name][i];
      std::string path = name + "[#" + std::to_string(i) + "]";
      if (rec.contains(key) && rec[key].is_string()) {
        path = name + "[" + rec[key].get<std::string>() + "]";
      } else if (rec.contains(key) && rec[key].is_number_integer()) {
        path = name + "[" + rec[key].dump() + "]";
      }
      for (const auto& f : fields) {
        if (!f.numeric) {
          str_field(rec, path, f.name, true, f.pattern, f.min_len);
          continue;
        }
        if (!rec.contains(f.name)) {
          out.emplace_back(path + "." + f.name, "missing");
        } else if (!rec[f.name].is_number()) {
          out.emplace_back(path + "." + f.name, "type");
        } else if (rec[f.name].get<double>() < 0 || rec[f.name].get<double>() > 10000) {
          out.emplace_back(path + "." + f.name, "bounds");
        }
      }
      for (auto it = rec.begin(); it != rec.end(); ++it) {
        bool known = std::any_of(fields.begin(), fields.end(),
                                 [&](const Field& f) { return f.name == it.key(); });
        if (!known) out.emplace_back(path + "." + it.key(), "unknown-field");
      }
      if (rec.contains(key) && !keys.insert(rec[key].dump()).second) {
        out.emplace_back(path, "duplicate-key");
      }
    }
  }
  for (auto it = s.begin(); it != s.end(); ++it) {
    static const std::set<std::string> top = {"current_time", "hotels", "bookings", "weather",
                                              "notes"};
    if (!top.count(it.key())) out.emplace_back(it.key(), "unknown-field");
  }
  std::sort(out.begin(), out.end());
  return out;
}

Json mutate(Json s, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> count(0, 4);
  const char* colls[] = {"hotels", "bookings", "weather", "notes"};
  s["bookings"].push_back({{"booking_id", "B1"}, {"hotel_id", "H1"}, {"guest_name", "Ann"}});
  for (int m = count(gen); m > 0; --m) {
    Json& c = s[colls[gen() % 4]];
    Json* rec = c.empty() ? nullptr : &c[gen() % c.size()];
    switch (pick(gen)) {
      case 0: s["current_time"] = gen() % 2 ? "noon" : "2025-01-01T10:00"; break;
      case 1: if (rec) rec->erase(rec->begin().key()); break;
      case 2: if (rec) (*rec)["extra"] = 1; break;
      case 3: if (!c.empty()) c.push_back(c[0]); break;
      case 4: s["hotels"][gen() % 3]["price_per_night"] = (gen() % 2 ? -1.0 : 20000.0); break;
      case 5: s["hotels"][gen() % 3]["hotel_id"] = gen() % 2 ? "H7" : "hotel"; break;
      case 6: s["hotels"][gen() % 3]["name"] = ""; break;
      case 7: if (rec) (*rec)[rec->begin().key()] = 42; break;
      case 8: s["stray"] = true; break;
      default: s["bookings"][0]["booking_id"] = "B" + std::to_string(gen() % 3); break;
    }
  }
  return s;
}

TEST(ValidateState, AgreesWithReferenceCheckerOnFuzzedStates) {
  auto env = travel_env();
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 400; ++i) {
    Json s = mutate(travel_scenario(), gen);
    auto report = validate_state(s, env.schema);
    std::vector<std::pair<std::string, std::string>> got;
    for (const auto& v : report.violations) got.emplace_back(v.path, v.rule);
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got, naive_violations(s)) << s.dump();
  }
}

TEST(Paths, ParseAndReject) {
  auto p = parse_path("hotels[H1].price_per_night");
  ASSERT_EQ(p.segments.size(), 2u);
  EXPECT_EQ(p.segments[0].name, "hotels");
  EXPECT_EQ(p.segments[0].selector, "H1");
  EXPECT_EQ(p.segments[1].name, "price_per_night");
  EXPECT_EQ(parse_path("bookings[*].guest_name").segments[0].selector, "*");
  for (const char* bad : {"", "a..b", "a[", "a[]", "[x]", "a.b[c", "1abc", "a b"}) {
    EXPECT_THROW(parse_path(bad), PathError) << bad;
  }
}

TEST(Paths, ApplyChanges) {
  auto env = travel_env();
  auto s = travel_scenario();
  apply_changes(s,
                {{"bookings", StateChange::Op::Append,
                  Json{{"booking_id", "B1"}, {"hotel_id", "H1"}, {"guest_name", "A"}}},
                 {"hotels[H2].price_per_night", StateChange::Op::Set, 99},
                 {"notes[N1]", StateChange::Op::Remove, nullptr},
                 {"weather[*].forecast", StateChange::Op::Set, "fog"}},
                env.schema);
  EXPECT_EQ(s["bookings"].size(), 1u);
  EXPECT_EQ(s["hotels"][1]["price_per_night"], 99);
  EXPECT_TRUE(s["notes"].empty());
  EXPECT_EQ(s["weather"][0]["forecast"], "fog");
  EXPECT_EQ(s["weather"][1]["forecast"], "fog");
  EXPECT_THROW(apply_changes(s, {{"notes[N9]", StateChange::Op::Remove, nullptr}}, env.schema),
               PathError);
  EXPECT_THROW(apply_changes(s, {{"current_time", StateChange::Op::Append, 1}}, env.schema),
               PathError);
}

TEST(Paths, ChangeJsonRoundTrip) {
  for (const auto& c : {StateChange{"a", StateChange::Op::Set, 1},
                        StateChange{"b", StateChange::Op::Append, Json{{"x", 1}}},
                        StateChange{"c[K]", StateChange::Op::Remove, nullptr}}) {
    EXPECT_EQ(change_from_json(to_json(c)), c);
  }
  EXPECT_THROW(change_from_json(Json{{"path", "a"}}), ParseError);
  EXPECT_THROW(change_from_json(Json{{"set", 1}}), ParseError);
}

TEST(Canonicalize, KeyOrderIrrelevant) {
  auto env = travel_env();
  auto a = travel_scenario();
  Json b = Json::object();
  b["current_time"] = a["current_time"];
  b["notes"] = a["notes"];
  b["weather"] = Json::array({a["weather"][1], a["weather"][0]});
  b["bookings"] = a["bookings"];
  b["hotels"] = Json::array({a["hotels"][2], a["hotels"][0], a["hotels"][1]});
  EXPECT_EQ(canonicalize_state(a, env.schema), canonicalize_state(b, env.schema));
}

TEST(Canonicalize, ExcludedPathDifferencesVanish) {
  auto env = travel_env();
  auto a = travel_scenario();
  auto b = a;
  b["current_time"] = "2030-01-01T00:00:00Z";
  b["hotels"][0]["price_per_night"] = 1;
  std::vector<std::string> ex = {"current_time", "hotels[*].price_per_night"};
  EXPECT_EQ(canonicalize_state(a, env.schema, ex), canonicalize_state(b, env.schema, ex));
  EXPECT_NE(canonicalize_state(a, env.schema), canonicalize_state(b, env.schema));
}

TEST(Canonicalize, ScalarDifferenceChangesBytes) {
  auto env = travel_env();
  auto a = travel_scenario();
  auto b = a;
  b["weather"][0]["forecast"] = "cloudy";
  EXPECT_NE(canonicalize_state(a, env.schema), canonicalize_state(b, env.schema));
}

TEST(Canonicalize, MalformedExclusionThrows) {
  auto env = travel_env();
  EXPECT_THROW(canonicalize_state(travel_scenario(), env.schema, {"hotels["}), PathError);
}

TEST(Canonicalize, ShortestRoundTripFloats) {
  auto env = travel_env();
  auto s = travel_scenario();
  s["hotels"][0]["price_per_night"] = 0.1;
  std::string bytes = canonicalize_state(s, env.schema);
  EXPECT_NE(bytes.find("\"price_per_night\":0.1}"), std::string::npos) << bytes;
}

Json shuffled(const Json& v, std::mt19937_64& gen) {
  if (v.is_array()) {
    std::vector<Json> items(v.begin(), v.end());
    std::shuffle(items.begin(), items.end(), gen);
    Json out = Json::array();
    for (auto& x : items) out.push_back(x);
    return out;
  }
  if (v.is_object()) {
    Json out = Json::object();
    for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = shuffled(it.value(), gen);
    return out;
  }
  return v;
}

TEST(Canonicalize, EqualIffEqualAfterExclusion) {
  auto env = travel_env();
  std::mt19937_64 gen(77);
  auto base = travel_scenario();
  for (int i = 0; i < 10; ++i) {
    base["bookings"].push_back({{"booking_id", "B" + std::to_string(i)},
                                {"hotel_id", "H" + std::to_string(1 + i % 3)},
                                {"guest_name", "g" + std::to_string(i)}});
  }
  const std::vector<std::string> ex = {"bookings[*].guest_name"};
  for (int i = 0; i < 200; ++i) {
    Json a = shuffled(base, gen);
    Json b = shuffled(base, gen);
    EXPECT_EQ(canonicalize_state(a, env.schema, ex), canonicalize_state(b, env.schema, ex));
    // Mutate one retained or excluded leaf in b.
    std::size_t k = gen() % base["bookings"].size();
    bool excluded = gen() % 2 == 0;
    for (auto& rec : b["bookings"]) {
      if (rec["booking_id"] != base["bookings"][k]["booking_id"]) continue;
      if (excluded) rec["guest_name"] = "changed";
      else rec["hotel_id"] = "H9";
    }
    EXPECT_EQ(canonicalize_state(a, env.schema, ex) == canonicalize_state(b, env.schema, ex),
              excluded);
  }
}

TEST(StatesEquivalent, RelativeTolerance) {
  auto env = travel_env();
  auto a = travel_scenario();
  auto b = a;
  b["hotels"][0]["price_per_night"] = 180.0 * (1 + 1e-12);
  EXPECT_TRUE(states_equivalent(a, b, env.schema, {}, 1e-9));
  EXPECT_FALSE(states_equivalent(a, b, env.schema, {}, 0.0));
  b["hotels"][0]["price_per_night"] = 181;
  EXPECT_FALSE(states_equivalent(a, b, env.schema, {}, 1e-9));
  EXPECT_TRUE(states_equivalent(a, b, env.schema, {"hotels[H1].price_per_night"}, 1e-9));
}

}  // namespace
}  // namespace envsynth
