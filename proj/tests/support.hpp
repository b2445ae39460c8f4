// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

// Shared fixtures and generators for the test binaries and the acceptance
// runner. Everything here is independent of the code under test except the
// data types it constructs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"
#include "envsynth/runtime.hpp"
#include "envsynth/sampler.hpp"
#include "envsynth/toolgraph.hpp"

namespace envsynth::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(ENVSYNTH_FIXTURES) / rel;
}

inline EnvironmentSpec travel_env() { return load_environment_file(fixture("envs/travel.json")); }

inline Json travel_scenario() { return parse_json_text(read_text_file(fixture("travel_scenario.json"))); }

inline ParamSpec param(std::string name, ValueKind kind = ValueKind::String, bool required = true) {
  ParamSpec p;
  p.name = std::move(name);
  p.value_kind = kind;
  p.required = required;
  return p;
}

// Words whose pairwise lexical similarity stays below any useful threshold,
// so `<word>_id` names only match themselves.
inline const std::vector<std::string>& node_words() {
  static const std::vector<std::string> words = {
      "apple", "brick", "cedar", "delta", "ember", "fjord", "grape", "harbor", "igloo", "jasper",
      "kayak", "lemon", "maple", "nectar", "opal",  "pepper", "quartz", "raven", "saffron", "tulip"};
  return words;
}

/// A random tool world: tools, graph and parameter classes. Each tool v
/// outputs `<word_v>_id`; for a random subset of its predecessors u it takes
/// `<word_u>_id` as a required internal input. With `dangling_p`, a tool also
/// gets an internal input nobody produces.
struct RandomWorld {
  std::vector<ToolEntry> tools;
  ToolCatalog catalog{{}};
  DependencyGraph graph;
  ParamClasses classes;

  SamplingContext ctx() const { return {graph, catalog, classes}; }
};

inline RandomWorld random_world(std::mt19937_64& gen, std::size_t n, double density,
                                double input_p = 0.5, double dangling_p = 0.0,
                                std::size_t max_internal = SIZE_MAX) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::string env = "rand";
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) adj[i][j] = i != j && coin(gen) < density;
  }
  RandomWorld w;
  for (std::size_t v = 0; v < n; ++v) {
    ToolSpec spec;
    spec.name = "tool_" + node_words()[v];
    spec.outputs.push_back(param(node_words()[v] + "_id"));
    spec.inputs.push_back(param("comment", ValueKind::String, coin(gen) < 0.5));
    std::size_t internal = 0;
    for (std::size_t u = 0; u < n && internal < max_internal; ++u) {
      if (adj[u][v] && coin(gen) < input_p) {
        spec.inputs.push_back(param(node_words()[u] + "_id"));
        ++internal;
      }
    }
    if (coin(gen) < dangling_p) spec.inputs.push_back(param("orphan_token"));
    w.tools.push_back({env, std::move(spec)});
  }
  std::sort(w.tools.begin(), w.tools.end(),
            [](const ToolEntry& a, const ToolEntry& b) { return a.spec.name < b.spec.name; });
  w.catalog = ToolCatalog(w.tools);
  std::vector<ToolRef> refs;
  for (const auto& t : w.tools) refs.push_back(t.ref());
  w.graph = DependencyGraph(refs, kDefaultThreshold, "lexical");
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      if (adj[u][v]) {
        w.graph.add_edge({{env, "tool_" + node_words()[u]}, {env, "tool_" + node_words()[v]},
                          Provenance::Semantic, {}});
      }
    }
  }
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  return w;
}

/// The travel fixture as a sampling world, graph read from the golden file.
inline RandomWorld travel_world() {
  RandomWorld w;
  w.tools = collect_tools({travel_env()});
  w.catalog = ToolCatalog(w.tools);
  w.graph = load_graph(read_text_file(fixture("golden/travel_graph.json")));
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  return w;
}

/// Closure check written from the definition: every required internal input
/// of chain[i] has a producer among chain[0..i).
inline bool oracle_closed(const ToolCatalog& catalog, const ParamClasses& classes,
                          double threshold, const std::vector<ToolRef>& chain) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (const auto& p : catalog.at(chain[i]).inputs) {
      if (!p.required || p.default_value) continue;
      if (classes.at(chain[i], p.name) != ParamClass::Internal) continue;
      bool found = false;
      for (std::size_t j = 0; j < i && !found; ++j) {
        for (const auto& o : catalog.at(chain[j]).outputs) {
          found = found || o.name == p.name || lexical_similarity(o.name, p.name) >= threshold;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

/// Every duplicate-free closed sequence of length 1..max_len, by walking all
/// permutations of every subset.
inline std::set<std::vector<ToolRef>> oracle_chains(const ToolCatalog& catalog,
                                                    const ParamClasses& classes,
                                                    const DependencyGraph& graph,
                                                    std::size_t max_len) {
  std::set<std::vector<ToolRef>> out;
  const auto& nodes = graph.nodes();
  const std::size_t n = nodes.size();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<ToolRef> pick;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) pick.push_back(nodes[i]);
    }
    if (pick.size() > max_len) continue;
    std::sort(pick.begin(), pick.end());
    do {
      if (oracle_closed(catalog, classes, graph.threshold(), pick)) out.insert(pick);
    } while (std::next_permutation(pick.begin(), pick.end()));
  }
  return out;
}

/// One tool call drawn for session-isolation checks.
struct TravelOp {
  std::string tool;
  Json args;
};

/// Mixes reads, writes and calls that fail (absent keys, missing arguments).
inline TravelOp random_travel_op(std::mt19937_64& gen) {
  static const char* cities[] = {"Paris", "London", "Rome"};
  static const char* hotels[] = {"H1", "H2", "H3", "H9"};
  static const char* guests[] = {"Ann", "Bo", "Cy"};
  switch (gen() % 7) {
    case 0: return {"search_hotels", {{"city", cities[gen() % 3]}}};
    case 1: return {"get_hotel_details", {{"hotel_id", hotels[gen() % 4]}}};
    case 2:
    case 3: return {"book_hotel", {{"hotel_id", hotels[gen() % 4]}, {"guest_name", guests[gen() % 3]}}};
    case 4: return {"cancel_booking", {{"booking_id", "B" + std::to_string(1 + gen() % 4)}}};
    case 5: return {"get_weather", {{"city", cities[gen() % 3]}}};
    default: return gen() % 2 ? TravelOp{"delete_all_notes", Json::object()}
                              : TravelOp{"book_hotel", {{"hotel_id", "H1"}}};
  }
}

/// Result of the call, or {code} when it failed with a tool error.
inline Json apply_op(Runtime& runtime, const std::string& client_id, const TravelOp& op) {
  try {
    return runtime.call_tool(client_id, op.tool, op.args);
  } catch (const ToolError& e) {
    return Json{{"code", e.code()}};
  }
}

/// A replayable travel trajectory with copies of successful reads inserted
/// after the originals. Reads never fail later because hotels and weather
/// are never deleted. Returns the trajectory and the number of copies.
inline std::pair<TrajectoryRecord, std::size_t> duplicate_read_trajectory(std::mt19937_64& gen) {
  Runtime scratch;
  scratch.add_environment(travel_env());
  scratch.create_session("scratch", "travel");
  scratch.load_scenario("scratch", travel_scenario());
  std::vector<ToolCallStep> calls;
  const std::size_t length = 2 + gen() % 7;
  while (calls.size() < length) {
    TravelOp op = random_travel_op(gen);
    if (apply_op(scratch, "scratch", op).contains("code")) continue;
    ToolCallStep step;
    step.tool = op.tool;
    step.arguments = op.args;
    calls.push_back(std::move(step));
  }
  std::vector<std::size_t> reads;
  for (std::size_t i = 0; i < calls.size(); ++i) {
    if (calls[i].tool == "search_hotels" || calls[i].tool == "get_hotel_details" || calls[i].tool == "get_weather") {
      reads.push_back(i);
    }
  }
  if (reads.empty()) {
    ToolCallStep weather;
    weather.tool = "get_weather";
    weather.arguments = {{"city", "Paris"}};
    calls.insert(calls.begin(), weather);
    reads.push_back(0);
  }
  const std::size_t copies = 1 + gen() % 2;
  for (std::size_t c = 0; c < copies; ++c) {
    ToolCallStep copy = calls[reads[gen() % reads.size()]];
    std::size_t first = 0;
    while (!(calls[first].tool == copy.tool && calls[first].arguments == copy.arguments)) ++first;
    std::size_t at = first + 1 + gen() % (calls.size() - first);
    calls.insert(calls.begin() + static_cast<std::ptrdiff_t>(at), copy);
  }
  TrajectoryRecord traj;
  traj.environment = "travel";
  for (std::size_t i = 0; i < calls.size(); i += 3) {
    Turn turn;
    turn.user_query = "request " + std::to_string(i / 3 + 1);
    for (std::size_t j = i; j < std::min(i + 3, calls.size()); ++j) turn.steps.emplace_back(calls[j]);
    turn.steps.emplace_back(MessageStep{Side::Assistant, "done"});
    traj.turns.push_back(std::move(turn));
  }
  return {traj, copies};
}

}  // namespace envsynth::testing
