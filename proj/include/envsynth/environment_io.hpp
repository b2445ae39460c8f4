// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "envsynth/model.hpp"

namespace envsynth {

/// Parses and validates one environment document. Throws ParseError for
/// malformed text and SpecError (with a field path) for invariant violations.
EnvironmentSpec parse_environment(std::string_view text);
EnvironmentSpec environment_from_json(const Json& doc);

Json to_json(const ParamSpec& param);
Json to_json(const ToolSpec& tool, bool include_effect = true);
Json to_json(const EffectSpec& effect);
Json to_json(const ScenarioSchema& schema);
Json to_json(const EnvironmentSpec& env);

ParamSpec param_from_json(const Json& doc, const std::string& path);

/// Pretty-printed, deterministic environment document.
std::string serialize_environment(const EnvironmentSpec& env);

EnvironmentSpec load_environment_file(const std::filesystem::path& file);

/// Every `*.json` environment in `dir`, sorted by environment name. Throws
/// ParseError when the directory is missing or holds no environments.
std::vector<EnvironmentSpec> load_environment_dir(const std::filesystem::path& dir);

/// Trajectory documents. When `env` is given, every tool_call must name one
/// of its tools (SpecError otherwise).
TrajectoryRecord parse_trajectory(std::string_view text,
                                  const EnvironmentSpec* env = nullptr);
TrajectoryRecord trajectory_from_json(const Json& doc,
                                      const EnvironmentSpec* env = nullptr);
Json to_json(const TrajectoryRecord& traj);
std::string serialize_trajectory(const TrajectoryRecord& traj);

/// Parses JSON text, mapping syntax errors to ParseError.
Json parse_json_text(std::string_view text);
std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, std::string_view text);

}  // namespace envsynth
