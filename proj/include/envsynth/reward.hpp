// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <string>
#include <vector>

#include "envsynth/model.hpp"
#include "envsynth/runtime.hpp"
#include "envsynth/state.hpp"

namespace envsynth {

struct RewardConfig {
  double alpha = 0.5;  // trajectory weight, in [0,1]
  double gamma = 0.1;  // length-penalty weight, >= 0
  double float_tolerance = 1e-9;
  std::vector<std::string> masked_state_paths;

  /// Throws ConfigError.
  void validate() const;
};

struct RewardBreakdown {
  double r_traj = 0;
  double r_state = 0;
  double p_length = 0;
  double r = 0;

  bool operator==(const RewardBreakdown&) const = default;
};

/// Same tool, and equal values for every gold argument outside gold's
/// masked_args. Arguments only present in `pred` are ignored.
bool calls_match(const ToolCallStep& pred, const ToolCallStep& gold);

/// Gold-normalized longest common subsequence under calls_match. Consecutive
/// gold calls sharing a `block` id match as an unordered group (maximum
/// bipartite matching against a contiguous stretch of pred). Empty gold
/// scores 1 iff pred is empty. With `env`, throws ToolError(UnknownTool) for
/// calls naming tools the environment lacks.
double traj_reward(const std::vector<ToolCallStep>& pred, const std::vector<ToolCallStep>& gold,
                   const EnvironmentSpec* env = nullptr);

/// 1 iff the canonical states agree outside the masked paths, numbers within
/// relative tolerance. Throws ToolError(SchemaViolation) when either state is
/// invalid.
double state_reward(const ScenarioState& pred_final, const ScenarioState& gold_final,
                    const ScenarioSchema& schema, const RewardConfig& cfg);

/// clamp((|pred| - |gold|) / max(1, |gold|), 0, 1) over tool-call counts.
double length_penalty(std::size_t pred_calls, std::size_t gold_calls);

/// r = alpha * r_traj + (1 - alpha) * r_state - gamma * p_length.
RewardBreakdown combine(double r_traj, double r_state, double p_length, const RewardConfig& cfg);

RewardBreakdown composite_reward(const TrajectoryRecord& pred, const TrajectoryRecord& gold,
                                 const ScenarioState& pred_final,
                                 const ScenarioState& gold_final, const EnvironmentSpec& env,
                                 const RewardConfig& cfg);

/// Executes every tool call (both sides) in order on a fresh session loaded
/// with `scenario` and returns the saved final state. Step failures throw
/// ReplayError carrying turn, step and flat call index.
ScenarioState replay_trajectory(const TrajectoryRecord& traj, const ScenarioState& scenario,
                                Runtime& runtime);

/// {r_traj, r_state, p_length, r, alpha, gamma, definitions}.
Json score_report(const RewardBreakdown& b, const RewardConfig& cfg);

}  // namespace envsynth
