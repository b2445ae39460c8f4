// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "envsynth/errors.hpp"
#include "envsynth/model.hpp"
#include "envsynth/reward.hpp"
#include "envsynth/rng.hpp"
#include "envsynth/runtime.hpp"
#include "envsynth/toolgraph.hpp"

namespace envsynth {

class EmptyError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kMaxTurnSize = 5;

/// Partitions of a chain into consecutive turns of 1..5 tools each.
struct TurnPlan {
  std::vector<std::vector<ToolRef>> partitions;
  bool operator==(const TurnPlan&) const = default;
};

/// Left-to-right cut: each turn size is uniform in 1..min(5, remaining).
/// Throws EmptyError for an empty chain.
TurnPlan partition_turns(const std::vector<ToolRef>& chain, Rng& rng);

std::string save_plan(const TurnPlan& plan, const std::string& chain_ref);
TurnPlan load_plan(std::string_view text);

struct Candidate {
  TrajectoryRecord trajectory;
  ScenarioState final_state;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  Candidate target;
};

/// Index of the candidate with the highest composite reward against the
/// target; ties go to fewer tool calls, then the lower index. Throws
/// EmptyError.
std::size_t select_best(const CandidateSet& set, const EnvironmentSpec& env,
                        const RewardConfig& cfg);

/// Greedy left-to-right removal of tool calls. A drop is kept when the
/// shorter trajectory replays without error, ends in a canonically equal
/// state, and yields the same set of distinct (tool, arguments, result)
/// observations. Messages are never dropped. Throws ReplayError when the
/// input itself does not replay.
TrajectoryRecord filter_redundant(const TrajectoryRecord& traj, const ScenarioState& scenario,
                                  Runtime& runtime);

/// Drops assistant messages immediately followed by another assistant step
/// (message or tool call) in the same turn.
TrajectoryRecord prune_assistant_chatter(const TrajectoryRecord& traj);

enum class MaskRules { Heuristic, Remote };

/// Argument names treated as presentation limits.
const std::vector<std::string>& presentation_limit_names();

/// Heuristic: masks optional arguments equal to their declared default and
/// presentation limits. Remote sends `{env, tool, argument, value}` and
/// expects `{masked: bool}`. Existing masks are kept.
TrajectoryRecord mask_arguments(const TrajectoryRecord& traj, const EnvironmentSpec& env,
                                MaskRules rules, const RemoteCall& remote = {});

/// Produces user-query text for a planned turn.
class QueryTextProvider {
 public:
  virtual ~QueryTextProvider() = default;
  virtual std::string query_for(const std::vector<ToolRef>& turn, std::size_t turn_index) = 0;
};

/// Deterministic placeholder text naming the planned tools.
class TemplateQueryProvider final : public QueryTextProvider {
 public:
  std::string query_for(const std::vector<ToolRef>& turn, std::size_t turn_index) override;
};

}  // namespace envsynth
