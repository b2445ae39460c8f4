// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/reward.hpp"

#include <algorithm>
#include <cmath>

#include "envsynth/errors.hpp"

namespace envsynth {

namespace {

// Kuhn's augmenting-path matching between a gold block and a pred stretch.
class Matcher {
 public:
  Matcher(const std::vector<const ToolCallStep*>& gold, const ToolCallStep* pred,
          std::size_t pred_len)
      : gold_(gold), pred_(pred), owner_(pred_len, -1) {}

  std::size_t run() {
    std::size_t size = 0;
    for (std::size_t g = 0; g < gold_.size(); ++g) {
      seen_.assign(owner_.size(), false);
      if (augment(g)) ++size;
    }
    return size;
  }

 private:
  bool augment(std::size_t g) {
    for (std::size_t p = 0; p < owner_.size(); ++p) {
      if (seen_[p] || !calls_match(pred_[p], *gold_[g])) continue;
      seen_[p] = true;
      if (owner_[p] < 0 || augment(static_cast<std::size_t>(owner_[p]))) {
        owner_[p] = static_cast<long>(g);
        return true;
      }
    }
    return false;
  }

  const std::vector<const ToolCallStep*>& gold_;
  const ToolCallStep* pred_;
  std::vector<long> owner_;
  std::vector<bool> seen_;
};

void check_tools(const std::vector<ToolCallStep>& calls, const EnvironmentSpec& env) {
  for (const auto& c : calls) {
    if (env.tool(c.tool) == nullptr) {
      throw ToolError(Fault::UnknownTool, "unknown tool '" + c.tool + "' in " + env.name);
    }
  }
}

}  // namespace

void RewardConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
  if (!(float_tolerance >= 0.0)) throw ConfigError("float_tolerance must be >= 0");
  for (const auto& p : masked_state_paths) {
    try {
      parse_path(p);
    } catch (const PathError& e) {
      throw ConfigError(std::string("masked state path: ") + e.what());
    }
  }
}

bool calls_match(const ToolCallStep& pred, const ToolCallStep& gold) {
  if (pred.tool != gold.tool) return false;
  for (auto it = gold.arguments.begin(); it != gold.arguments.end(); ++it) {
    if (std::find(gold.masked_args.begin(), gold.masked_args.end(), it.key()) != gold.masked_args.end()) {
      continue;
    }
    auto p = pred.arguments.find(it.key());
    if (p == pred.arguments.end() || *p != *it) return false;
  }
  return true;
}

double traj_reward(const std::vector<ToolCallStep>& pred, const std::vector<ToolCallStep>& gold,
                   const EnvironmentSpec* env) {
  if (env) {
    check_tools(pred, *env);
    check_tools(gold, *env);
  }
  if (gold.empty()) return pred.empty() ? 1.0 : 0.0;

  // Gold units: maximal runs sharing a block id, singletons otherwise.
  std::vector<std::vector<const ToolCallStep*>> units;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool joins = i > 0 && gold[i].block && gold[i - 1].block && *gold[i].block == *gold[i - 1].block;
    if (joins) {
      units.back().push_back(&gold[i]);
    } else {
      units.push_back({&gold[i]});
    }
  }

  // best[u][j]: matched gold calls using the first u units and the first j
  // pred calls.
  const std::size_t m = pred.size();
  std::vector<std::vector<std::size_t>> best(units.size() + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t u = 1; u <= units.size(); ++u) {
    const auto& unit = units[u - 1];
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t v = std::max(best[u - 1][j], best[u][j - 1]);
      if (unit.size() == 1) {
        if (calls_match(pred[j - 1], *unit[0])) v = std::max(v, best[u - 1][j - 1] + 1);
      } else {
        for (std::size_t k = 0; k < j; ++k) {
          std::size_t matched = Matcher(unit, pred.data() + k, j - k).run();
          v = std::max(v, best[u - 1][k] + matched);
        }
      }
      best[u][j] = v;
    }
  }
  return static_cast<double>(best[units.size()][m]) / static_cast<double>(gold.size());
}

double state_reward(const ScenarioState& pred_final, const ScenarioState& gold_final,
                    const ScenarioSchema& schema, const RewardConfig& cfg) {
  for (const auto* side : {&pred_final, &gold_final}) {
    ValidationReport report = validate_state(*side, schema);
    if (!report.ok()) {
      const char* which = side == &pred_final ? "predicted" : "gold";
      throw ToolError(Fault::SchemaViolation,
                      std::string(which) + " final state violates the schema at " +
                          report.violations.front().path,
                      report.to_json());
    }
  }
  return states_equivalent(pred_final, gold_final, schema, cfg.masked_state_paths,
                           cfg.float_tolerance)
             ? 1.0
             : 0.0;
}

double length_penalty(std::size_t pred_calls, std::size_t gold_calls) {
  double over = (static_cast<double>(pred_calls) - static_cast<double>(gold_calls)) /
                static_cast<double>(std::max<std::size_t>(1, gold_calls));
  return std::clamp(over, 0.0, 1.0);
}

RewardBreakdown combine(double r_traj, double r_state, double p_length, const RewardConfig& cfg) {
  RewardBreakdown b;
  b.r_traj = r_traj;
  b.r_state = r_state;
  b.p_length = p_length;
  b.r = cfg.alpha * r_traj + (1 - cfg.alpha) * r_state - cfg.gamma * p_length;
  return b;
}

RewardBreakdown composite_reward(const TrajectoryRecord& pred, const TrajectoryRecord& gold,
                                 const ScenarioState& pred_final,
                                 const ScenarioState& gold_final, const EnvironmentSpec& env,
                                 const RewardConfig& cfg) {
  cfg.validate();
  auto pred_calls = pred.tool_calls();
  auto gold_calls = gold.tool_calls();
  double rt = traj_reward(pred_calls, gold_calls, &env);
  double rs = state_reward(pred_final, gold_final, env.schema, cfg);
  double p = length_penalty(pred_calls.size(), gold_calls.size());
  return combine(rt, rs, p, cfg);
}

ScenarioState replay_trajectory(const TrajectoryRecord& traj, const ScenarioState& scenario,
                                Runtime& runtime) {
  ScopedSession session(runtime, runtime.fresh_client_id("replay"), traj.environment);
  runtime.load_scenario(session.id(), scenario);
  std::size_t flat = 0;
  for (std::size_t t = 0; t < traj.turns.size(); ++t) {
    const auto& steps = traj.turns[t].steps;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const auto* call = std::get_if<ToolCallStep>(&steps[s]);
      if (call == nullptr) continue;
      try {
        runtime.call_tool(session.id(), call->tool, call->arguments);
      } catch (const ToolError& e) {
        throw ReplayError(t, s, flat, e.code(), call->tool + ": " + e.what());
      } catch (const RemoteError& e) {
        throw ReplayError(t, s, flat, static_cast<int>(ErrorCode::Business),
                          call->tool + ": " + e.what());
      }
      ++flat;
    }
  }
  return runtime.save_scenario(session.id());
}

Json score_report(const RewardBreakdown& b, const RewardConfig& cfg) {
  return {{"r_traj", b.r_traj},
          {"r_state", b.r_state},
          {"p_length", b.p_length},
          {"r", b.r},
          {"alpha", cfg.alpha},
          {"gamma", cfg.gamma},
          {"definitions",
           {{"traj", "lcs/gold"}, {"state", "binary-canonical"}, {"length", "relative-clamped"}}}};
}

}  // namespace envsynth
