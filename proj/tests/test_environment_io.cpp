// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"
#include "support.hpp"

namespace envsynth {
namespace {

using testing::fixture;
using testing::travel_env;

Json travel_doc() { return parse_json_text(read_text_file(fixture("envs/travel.json"))); }

TEST(ParseEnvironment, TravelFixtureHasSixTools) {
  auto env = travel_env();
  EXPECT_EQ(env.name, "travel");
  ASSERT_EQ(env.tools.size(), 6u);
  for (const char* t : {"search_hotels", "get_hotel_details", "book_hotel", "cancel_booking",
                        "get_weather", "delete_all_notes"}) {
    EXPECT_NE(env.tool(t), nullptr) << t;
  }
  const ToolSpec* search = env.tool("search_hotels");
  ASSERT_NE(search->input("limit"), nullptr);
  EXPECT_TRUE(search->input("limit")->optional());
  EXPECT_FALSE(search->input("city")->optional());
  EXPECT_TRUE(env.tool("delete_all_notes")->inputs.empty());
  EXPECT_TRUE(env.tool("delete_all_notes")->outputs.empty());
}

TEST(ParseEnvironment, DuplicateToolNameNamesTheField) {
  Json doc = travel_doc();
  doc["tools"][3]["name"] = "search_hotels";
  try {
    environment_from_json(doc);
    FAIL() << "expected SpecError";
  } catch (const SpecError& e) {
    EXPECT_EQ(e.path(), "tools[3].name");
  }
}

TEST(ParseEnvironment, EmptyToolListIsValid) {
  Json doc = travel_doc();
  doc["tools"] = Json::array();
  doc["metadata"].erase("tools");
  EXPECT_EQ(environment_from_json(doc).tools.size(), 0u);
}

TEST(ParseEnvironment, MalformedTextIsParseError) {
  EXPECT_THROW(parse_environment("{\"name\": "), ParseError);
  EXPECT_THROW(parse_environment(""), ParseError);
}

TEST(ParseEnvironment, InvariantViolationsCarryPaths) {
  auto expect_path = [](Json doc, const std::string& path) {
    try {
      environment_from_json(doc);
      ADD_FAILURE() << "expected SpecError at " << path;
    } catch (const SpecError& e) {
      EXPECT_EQ(e.path(), path);
    }
  };
  Json doc = travel_doc();
  doc["colour"] = 1;
  expect_path(doc, "$.colour");

  doc = travel_doc();
  doc["tools"][0]["inputs"][0]["value_kind"] = "float";
  expect_path(doc, "tools[0].inputs[0].value_kind");

  doc = travel_doc();
  doc["tools"][1]["effect"]["collection"] = "castles";
  expect_path(doc, "tools[1].effect.collection");

  doc = travel_doc();
  doc["tools"][0]["inputs"][1]["required"] = true;
  expect_path(doc, "tools[0].inputs[1].default");

  doc = travel_doc();
  doc["tools"][0]["inputs"][0]["min"] = 5;
  doc["tools"][0]["inputs"][0]["max"] = 2;
  expect_path(doc, "tools[0].inputs[0].min");

  doc = travel_doc();
  doc["tools"][2].erase("effect");
  expect_path(doc, "tools[2].effect");
}

TEST(ParseEnvironment, FixtureRoundTrips) {
  for (const char* f : {"envs/travel.json", "lax/travel_lax.json", "bugs/travel_bug_shape.json",
                        "bugs/travel_bug_persist.json", "bugs/travel_bug_interface.json"}) {
    auto env = load_environment_file(fixture(f));
    auto text = serialize_environment(env);
    EXPECT_EQ(parse_environment(text), env) << f;
    EXPECT_EQ(serialize_environment(parse_environment(text)), text) << f;
  }
}

ParamSpec random_param(std::mt19937_64& gen, const std::string& name) {
  ParamSpec p = testing::param(name);
  p.description = gen() % 2 ? "" : "text for " + name;
  switch (gen() % 4) {
    case 0:
      p.value_kind = ValueKind::String;
      if (gen() % 2) p.pattern = "^[a-z]+$";
      if (gen() % 2) p.min = 1;
      break;
    case 1:
      p.value_kind = ValueKind::Integer;
      if (gen() % 2) {
        p.min = 0;
        p.max = 50;
      }
      if (gen() % 2) {
        p.required = false;
        p.default_value = 7;
      }
      break;
    case 2: p.value_kind = ValueKind::Number; break;
    default: p.value_kind = gen() % 2 ? ValueKind::Boolean : ValueKind::List; break;
  }
  if (p.value_kind != ValueKind::Integer && gen() % 3 == 0) p.required = false;
  if (gen() % 3 == 0) p.classification_hint = gen() % 2 ? ParamClass::Internal : ParamClass::External;
  return p;
}

TEST(ParseEnvironment, RandomSpecsRoundTrip) {
  std::mt19937_64 gen(11);
  for (int round = 0; round < 100; ++round) {
    EnvironmentSpec env;
    env.name = "env" + std::to_string(round);
    env.executor_mode = ExecutorMode::External;
    env.executor_url = "http://127.0.0.1:9/exec";
    env.metadata.description = "random";
    std::size_t n_tools = gen() % 5;
    std::vector<ToolSignature> sigs;
    for (std::size_t t = 0; t < n_tools; ++t) {
      ToolSpec tool;
      tool.name = "tool" + std::to_string(t);
      tool.side = gen() % 4 == 0 ? Side::User : Side::Assistant;
      for (std::size_t i = gen() % 4; i > 0; --i) {
        tool.inputs.push_back(random_param(gen, "in" + std::to_string(i)));
      }
      for (std::size_t i = gen() % 3; i > 0; --i) {
        tool.outputs.push_back(random_param(gen, "out" + std::to_string(i)));
      }
      ToolSignature sig{tool.name, {}, {}};
      for (const auto& p : tool.inputs) sig.inputs.push_back(p.name);
      for (const auto& p : tool.outputs) sig.outputs.push_back(p.name);
      sigs.push_back(sig);
      env.tools.push_back(std::move(tool));
    }
    if (gen() % 2) env.metadata.tools = sigs;
    EXPECT_EQ(parse_environment(serialize_environment(env)), env) << serialize_environment(env);
  }
}

TEST(EnvironmentDir, EmptyOrMissingDirectoryIsParseError) {
  auto dir = std::filesystem::temp_directory_path() / "envsynth_empty_env_dir";
  std::filesystem::create_directories(dir);
  EXPECT_THROW(load_environment_dir(dir), ParseError);
  EXPECT_THROW(load_environment_dir(dir / "missing"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST(EnvironmentDir, LoadsFixtureDirectory) {
  auto envs = load_environment_dir(fixture("envs"));
  ASSERT_EQ(envs.size(), 1u);
  EXPECT_EQ(envs[0].name, "travel");
}

TEST(Trajectory, ParsesAndRoundTrips) {
  auto env = travel_env();
  auto traj = parse_trajectory(read_text_file(fixture("trajectories/gold.json")), &env);
  EXPECT_EQ(traj.environment, "travel");
  ASSERT_EQ(traj.turns.size(), 1u);
  EXPECT_EQ(traj.tool_call_count(), 2u);
  auto calls = traj.tool_calls();
  EXPECT_EQ(calls[0].tool, "search_hotels");
  EXPECT_EQ(calls[1].arguments["guest_name"], "Alice");
  EXPECT_EQ(parse_trajectory(serialize_trajectory(traj), &env), traj);
}

TEST(Trajectory, MasksAndBlocksRoundTrip) {
  TrajectoryRecord t;
  t.environment = "travel";
  ToolCallStep a{"search_hotels", {{"city", "Paris"}, {"limit", 3}}, {"limit"}, Json{{"x", 1}}, 2};
  ToolCallStep b{"get_weather", {{"city", "Paris"}}, {}, std::nullopt, 2};
  t.turns.push_back({"q", {a, MessageStep{Side::User, "thanks"}, b}});
  t.turns.push_back({std::nullopt, {}});
  EXPECT_EQ(parse_trajectory(serialize_trajectory(t)), t);
}

TEST(Trajectory, UnknownToolOrMaskRejected) {
  auto env = travel_env();
  Json doc = parse_json_text(read_text_file(fixture("trajectories/gold.json")));
  doc["turns"][0]["steps"][0]["tool"] = "teleport";
  EXPECT_THROW(trajectory_from_json(doc, &env), SpecError);
  EXPECT_NO_THROW(trajectory_from_json(doc));

  doc = parse_json_text(read_text_file(fixture("trajectories/gold.json")));
  doc["turns"][0]["steps"][0]["masked_args"] = {"nope"};
  EXPECT_THROW(trajectory_from_json(doc), SpecError);

  doc = parse_json_text(read_text_file(fixture("trajectories/gold.json")));
  doc["environment"] = "banking";
  EXPECT_THROW(trajectory_from_json(doc, &env), SpecError);
}

}  // namespace
}  // namespace envsynth
