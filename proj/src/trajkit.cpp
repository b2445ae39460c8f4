// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/trajkit.hpp"

#include <algorithm>
#include <optional>
#include <set>

#include "envsynth/environment_io.hpp"

namespace envsynth {

namespace {

struct ReplayOutcome {
  ScenarioState final_state;
  std::set<std::string> observations;
};

// Replays on a fresh session; nullopt when any call fails.
std::optional<ReplayOutcome> observe(const TrajectoryRecord& traj, const ScenarioState& scenario,
                                     Runtime& runtime) {
  ScopedSession session(runtime, runtime.fresh_client_id("filter"), traj.environment);
  runtime.load_scenario(session.id(), scenario);
  ReplayOutcome out;
  for (const auto& turn : traj.turns) {
    for (const auto& step : turn.steps) {
      const auto* call = std::get_if<ToolCallStep>(&step);
      if (call == nullptr) continue;
      try {
        Json result = runtime.call_tool(session.id(), call->tool, call->arguments);
        out.observations.insert(Json::array({call->tool, call->arguments, result}).dump());
      } catch (const ToolError&) {
        return std::nullopt;
      }
    }
  }
  out.final_state = runtime.save_scenario(session.id());
  return out;
}

Json ref_to_json(const ToolRef& r) { return {{"env", r.env}, {"tool", r.tool}}; }

}  // namespace

TurnPlan partition_turns(const std::vector<ToolRef>& chain, Rng& rng) {
  if (chain.empty()) throw EmptyError("cannot partition an empty chain");
  TurnPlan plan;
  std::size_t pos = 0;
  while (pos < chain.size()) {
    std::size_t remaining = chain.size() - pos;
    std::size_t size = 1 + static_cast<std::size_t>(rng.index(std::min(kMaxTurnSize, remaining)));
    plan.partitions.emplace_back(chain.begin() + static_cast<std::ptrdiff_t>(pos),
                                 chain.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return plan;
}

std::string save_plan(const TurnPlan& plan, const std::string& chain_ref) {
  Json parts = Json::array();
  for (const auto& turn : plan.partitions) {
    Json refs = Json::array();
    for (const auto& r : turn) refs.push_back(ref_to_json(r));
    parts.push_back(std::move(refs));
  }
  return Json{{"chain_ref", chain_ref}, {"partitions", std::move(parts)}}.dump(2) + "\n";
}

TurnPlan load_plan(std::string_view text) {
  Json doc = parse_json_text(text);
  if (!doc.is_object() || !doc.contains("partitions") || !doc["partitions"].is_array()) {
    throw ParseError("plan file needs a 'partitions' list");
  }
  TurnPlan plan;
  for (const auto& turn : doc["partitions"]) {
    if (!turn.is_array() || turn.empty() || turn.size() > kMaxTurnSize) {
      throw ParseError("each partition must list 1 to 5 tools");
    }
    std::vector<ToolRef> refs;
    for (const auto& r : turn) {
      if (!r.is_object() || !r.contains("env") || !r.contains("tool")) {
        throw ParseError("plan entries need 'env' and 'tool'");
      }
      refs.push_back({r["env"].get<std::string>(), r["tool"].get<std::string>()});
    }
    plan.partitions.push_back(std::move(refs));
  }
  return plan;
}

std::size_t select_best(const CandidateSet& set, const EnvironmentSpec& env,
                        const RewardConfig& cfg) {
  if (set.candidates.empty()) throw EmptyError("no candidates to select from");
  std::size_t best = 0;
  double best_r = 0;
  std::size_t best_calls = 0;
  for (std::size_t i = 0; i < set.candidates.size(); ++i) {
    const Candidate& c = set.candidates[i];
    double r = composite_reward(c.trajectory, set.target.trajectory, c.final_state,
                                set.target.final_state, env, cfg)
                   .r;
    std::size_t calls = c.trajectory.tool_call_count();
    if (i == 0 || r > best_r || (r == best_r && calls < best_calls)) {
      best = i;
      best_r = r;
      best_calls = calls;
    }
  }
  return best;
}

TrajectoryRecord filter_redundant(const TrajectoryRecord& traj, const ScenarioState& scenario,
                                  Runtime& runtime) {
  const ScenarioState reference = replay_trajectory(traj, scenario, runtime);
  auto original = observe(traj, scenario, runtime);
  if (!original) throw Error("trajectory replay is not reproducible");
  auto env = runtime.environment(traj.environment);

  TrajectoryRecord current = traj;
  for (std::size_t t = 0; t < current.turns.size(); ++t) {
    for (std::size_t s = 0; s < current.turns[t].steps.size();) {
      if (!std::holds_alternative<ToolCallStep>(current.turns[t].steps[s])) {
        ++s;
        continue;
      }
      TrajectoryRecord trial = current;
      trial.turns[t].steps.erase(trial.turns[t].steps.begin() + static_cast<std::ptrdiff_t>(s));
      auto outcome = observe(trial, scenario, runtime);
      bool keep_drop = outcome && outcome->observations == original->observations &&
                       states_equivalent(outcome->final_state, reference, env->schema, {}, 0.0);
      if (keep_drop) {
        current = std::move(trial);
      } else {
        ++s;
      }
    }
  }
  return current;
}

TrajectoryRecord prune_assistant_chatter(const TrajectoryRecord& traj) {
  TrajectoryRecord out = traj;
  for (auto& turn : out.turns) {
    std::vector<Step> kept;
    for (std::size_t i = 0; i < turn.steps.size(); ++i) {
      const auto* msg = std::get_if<MessageStep>(&turn.steps[i]);
      bool assistant_msg = msg && msg->role == Side::Assistant;
      if (assistant_msg && i + 1 < turn.steps.size()) {
        const Step& next = turn.steps[i + 1];
        const auto* next_msg = std::get_if<MessageStep>(&next);
        bool next_is_assistant = next_msg == nullptr || next_msg->role == Side::Assistant;
        if (next_is_assistant) continue;
      }
      kept.push_back(turn.steps[i]);
    }
    turn.steps = std::move(kept);
  }
  return out;
}

const std::vector<std::string>& presentation_limit_names() {
  static const std::vector<std::string> names = {"limit", "max_results", "page_size"};
  return names;
}

TrajectoryRecord mask_arguments(const TrajectoryRecord& traj, const EnvironmentSpec& env,
                                MaskRules rules, const RemoteCall& remote) {
  if (rules == MaskRules::Remote && !remote) throw RemoteError("no masking endpoint configured");
  const auto& limits = presentation_limit_names();
  TrajectoryRecord out = traj;
  for (auto& turn : out.turns) {
    for (auto& step : turn.steps) {
      auto* call = std::get_if<ToolCallStep>(&step);
      if (call == nullptr) continue;
      const ToolSpec* tool = env.tool(call->tool);
      if (tool == nullptr) throw ToolError(Fault::UnknownTool, "unknown tool '" + call->tool + "'");
      std::set<std::string> masked(call->masked_args.begin(), call->masked_args.end());
      for (auto it = call->arguments.begin(); it != call->arguments.end(); ++it) {
        bool mask = false;
        if (rules == MaskRules::Heuristic) {
          const ParamSpec* p = tool->input(it.key());
          bool at_default = p && p->optional() && p->default_value && *p->default_value == it.value();
          bool is_limit = std::find(limits.begin(), limits.end(), it.key()) != limits.end();
          mask = at_default || is_limit;
        } else {
          Json reply = remote({{"env", env.name}, {"tool", call->tool}, {"argument", it.key()},
                               {"value", it.value()}});
          if (!reply.is_object() || !reply.contains("masked") || !reply["masked"].is_boolean()) {
            throw RemoteError("masking endpoint reply lacks a boolean 'masked'");
          }
          mask = reply["masked"].get<bool>();
        }
        if (mask) masked.insert(it.key());
      }
      call->masked_args.assign(masked.begin(), masked.end());
    }
  }
  return out;
}

std::string TemplateQueryProvider::query_for(const std::vector<ToolRef>& turn,
                                             std::size_t turn_index) {
  std::string text = "[turn " + std::to_string(turn_index + 1) + "] request requiring:";
  for (std::size_t i = 0; i < turn.size(); ++i) {
    text += (i == 0 ? " " : ", ") + turn[i].tool;
  }
  return text;
}

}  // namespace envsynth
