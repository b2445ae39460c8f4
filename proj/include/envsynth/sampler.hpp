// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "envsynth/model.hpp"
#include "envsynth/rng.hpp"
#include "envsynth/toolgraph.hpp"

namespace envsynth {

// ---------------------------------------------------------------------------
// Parameter classification

/// Class of every input parameter of every tool, keyed by (tool, parameter).
class ParamClasses {
 public:
  void set(const ToolRef& tool, const std::string& param, ParamClass cls);
  /// Throws SpecError for parameters that were never classified.
  ParamClass at(const ToolRef& tool, const std::string& param) const;
  bool contains(const ToolRef& tool, const std::string& param) const;
  std::size_t size() const noexcept { return classes_.size(); }

 private:
  std::map<std::pair<ToolRef, std::string>, ParamClass> classes_;
};

enum class ClassifyMode { Heuristic, Remote, Hints };

/// Internal iff the lowercased name is `id` or ends in _id, _ids, _token,
/// _key or _handle, or the description mentions "identifier" or
/// "returned by". Everything else is external.
ParamClass heuristic_class(const ParamSpec& param);

/// Remote mode sends `{env, tool, param}` per parameter and expects
/// `{class: "internal" | "external"}`; failures throw RemoteError.
ParamClasses classify_params(const std::vector<ToolEntry>& tools, ClassifyMode mode,
                             const RemoteCall& remote = {});

// ---------------------------------------------------------------------------
// Sampling

struct SamplerConfig {
  std::size_t n = 1;
  int d_max = 3;
  double override_p = 0.1;
  std::size_t branch_max = 1;
  std::uint64_t seed = 0;
  std::size_t max_restarts = 16;

  /// Throws ConfigError when an invariant fails.
  void validate() const;
};

/// How one input parameter of a chain element was satisfied. `via` is
/// "external", "optional", "prior:<tool>", "override" or "unresolved".
struct Resolution {
  std::string param;
  std::string via;

  bool operator==(const Resolution&) const = default;
};

struct TraceEntry {
  ToolRef tool;
  int depth = 0;  // backward-resolution depth at which the tool entered
  std::vector<Resolution> resolutions;

  bool operator==(const TraceEntry&) const = default;
};

/// Sampled tool chain tau with its resolution trace (one entry per tool, in
/// chain order).
struct ToolChain {
  std::vector<ToolRef> tools;
  std::vector<TraceEntry> trace;
  std::vector<std::string> warnings;
  bool exhausted = false;

  bool operator==(const ToolChain&) const = default;
};

/// Everything the sampler reads: graph, tool specs and parameter classes.
struct SamplingContext {
  const DependencyGraph& graph;
  const ToolCatalog& catalog;
  const ParamClasses& classes;
};

/// Visited set V-hat that remembers insertion order.
class VisitedSet {
 public:
  bool contains(const ToolRef& ref) const { return members_.count(ref) > 0; }
  void insert(const ToolRef& ref) {
    if (members_.insert(ref).second) order_.push_back(ref);
  }
  const std::vector<ToolRef>& order() const noexcept { return order_; }
  std::size_t size() const noexcept { return order_.size(); }

 private:
  std::set<ToolRef> members_;
  std::vector<ToolRef> order_;
};

/// True iff some output of `producer` has the parameter's name or a name at
/// lexical similarity >= threshold.
bool produces(const ToolSpec& producer, const ParamSpec& param, double threshold);

/// The three validity conditions: optional, external, or internal with a
/// visited producer.
bool is_valid(const SamplingContext& ctx, const ToolRef& owner, const ParamSpec& param,
              const VisitedSet& visited);

struct PriorResult {
  /// Priors in dependency order, each with its own trace entry.
  std::vector<TraceEntry> priors;
  /// Resolutions of the target tool's own inputs.
  std::vector<Resolution> resolutions;
};

/// Backward dependency resolution for `v`. Adds every sampled prior to
/// `visited`. Returns no priors once depth >= d_max.
PriorResult sample_priors(const SamplingContext& ctx, VisitedSet& visited, const ToolRef& v,
                          int depth, const SamplerConfig& cfg, Rng& rng);

/// Breadth-first chain sampling with backward resolution, skip-on-revisit and
/// restart-from-unvisited. A tool is committed together with its priors only
/// when the group is dependency-closed; otherwise it is rejected and the
/// sampler moves on.
ToolChain topology_sample(const SamplingContext& ctx, const SamplerConfig& cfg,
                          std::optional<ToolRef> start, Rng& rng);

/// Every required internal input of chain[i] is produced by some chain[j],
/// j < i.
bool dependency_closed(const SamplingContext& ctx, const std::vector<ToolRef>& chain);

/// Brute-force oracle: all duplicate-free sequences of length 1..max_len that
/// are dependency-closed. Throws TooLargeError for graphs over 8 nodes.
std::set<std::vector<ToolRef>> enumerate_feasible_chains(const SamplingContext& ctx,
                                                         std::size_t max_len);

/// Chain file I/O.
std::string save_chain(const ToolChain& chain, const SamplerConfig& cfg,
                       const std::string& graph_ref);
ToolChain load_chain(std::string_view text);

}  // namespace envsynth
