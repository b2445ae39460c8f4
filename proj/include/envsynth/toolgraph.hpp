// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "envsynth/model.hpp"

namespace envsynth {

/// Default similarity threshold for semantic parameter matching.
inline constexpr double kDefaultThreshold = 0.6;

/// A tool together with the environment that owns it.
struct ToolEntry {
  std::string env;
  ToolSpec spec;

  ToolRef ref() const { return {env, spec.name}; }
};

/// All tools of all environments, sorted by (environment, tool name).
std::vector<ToolEntry> collect_tools(const std::vector<EnvironmentSpec>& envs);

/// Lookup from ToolRef to its spec over a tool list.
class ToolCatalog {
 public:
  explicit ToolCatalog(std::vector<ToolEntry> tools);

  const ToolSpec* find(const ToolRef& ref) const;
  const ToolSpec& at(const ToolRef& ref) const;
  const std::vector<ToolEntry>& entries() const noexcept { return tools_; }

 private:
  std::vector<ToolEntry> tools_;
  std::map<ToolRef, std::size_t> index_;
};

/// Lowercased name tokens: split on underscores, non-alphanumerics and case
/// boundaries, trailing 's' stripped from each token.
std::set<std::string> name_tokens(std::string_view name);

/// Jaccard overlap of name_tokens.
double lexical_similarity(std::string_view a, std::string_view b);
double lexical_similarity(const ParamSpec& a, const ParamSpec& b);

/// A JSON request/reply exchange with a remote endpoint.
using RemoteCall = std::function<Json(const Json&)>;

/// RemoteCall that POSTs to `url`.
RemoteCall http_remote(std::string url);

struct ParamPair {
  const ParamSpec* output;
  const ParamSpec* input;
};

class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual std::string name() const = 0;
  /// One score in [0, 1] per pair, in order.
  virtual std::vector<double> score(std::span<const ParamPair> pairs) const = 0;
};

class LexicalProvider final : public SimilarityProvider {
 public:
  std::string name() const override { return "lexical"; }
  std::vector<double> score(std::span<const ParamPair> pairs) const override;
};

/// Embeds `name: description` texts through `{texts:[...]} -> {vectors:[...]}`
/// and scores by cosine similarity clamped to [0, 1].
class RemoteEmbeddingProvider final : public SimilarityProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteCall call) : call_(std::move(call)) {}
  std::string name() const override { return "remote"; }
  std::vector<double> score(std::span<const ParamPair> pairs) const override;

 private:
  RemoteCall call_;
};

enum class Provenance { Semantic, Refined };
const char* to_string(Provenance p) noexcept;

struct Witness {
  std::string output;
  std::string input;
  double score = 0.0;

  bool operator==(const Witness&) const = default;
};

struct Edge {
  ToolRef from;
  ToolRef to;
  Provenance provenance = Provenance::Semantic;
  std::vector<Witness> witnesses;

  bool operator==(const Edge&) const = default;
};

/// Directed dependency graph over tools. An edge u -> v asserts v may consume
/// outputs of u. Self-loops and dangling endpoints are rejected on insertion.
class DependencyGraph {
 public:
  DependencyGraph() = default;
  DependencyGraph(std::vector<ToolRef> nodes, double threshold, std::string provider);

  const std::vector<ToolRef>& nodes() const noexcept { return nodes_; }
  bool has_node(const ToolRef& ref) const;
  bool empty() const noexcept { return nodes_.empty(); }

  /// Throws SpecError on self-loops or unknown endpoints. Replaces an existing
  /// edge between the same endpoints.
  void add_edge(Edge edge);
  bool remove_edge(const ToolRef& from, const ToolRef& to);
  bool has_edge(const ToolRef& from, const ToolRef& to) const;
  const Edge* edge(const ToolRef& from, const ToolRef& to) const;

  /// Edges sorted by (from, to).
  std::vector<Edge> edges() const;
  std::size_t edge_count() const noexcept { return edges_.size(); }

  /// Sorted successor / predecessor lists.
  std::vector<ToolRef> successors(const ToolRef& v) const;
  std::vector<ToolRef> predecessors(const ToolRef& v) const;

  double threshold() const noexcept { return threshold_; }
  const std::string& provider() const noexcept { return provider_; }

  bool operator==(const DependencyGraph&) const = default;

 private:
  std::vector<ToolRef> nodes_;
  std::map<std::pair<ToolRef, ToolRef>, Edge> edges_;
  double threshold_ = kDefaultThreshold;
  std::string provider_ = "lexical";
};

/// Step 1: edge v_i -> v_j (i != j) iff some output of v_i and some input of
/// v_j score >= threshold; every qualifying pair is kept as a witness.
/// Provider failures throw ProviderError and no graph is produced.
DependencyGraph semantic_match(const std::vector<ToolEntry>& tools, double threshold,
                               const SimilarityProvider& provider);

enum class RefineMode { Rules, Remote };

struct RejectedEdge {
  ToolRef from;
  ToolRef to;
  std::string reason;
};

struct RefineResult {
  DependencyGraph graph;
  std::size_t added = 0;
  std::size_t removed = 0;
  std::vector<RejectedEdge> rejected;
};

/// Step 2. Rules mode: every tool with no inputs and no outputs gains an
/// incoming refined edge from each other tool of its environment. Remote mode
/// asks `remote` per environment for `{add, remove}` edge lists; invalid
/// proposals are rejected one by one and reported.
RefineResult refine_graph(const DependencyGraph& graph, const std::vector<ToolEntry>& tools,
                          RefineMode mode, const RemoteCall& remote = {});

std::string save_graph(const DependencyGraph& graph);
/// Throws ParseError on malformed text or edges naming unknown nodes.
DependencyGraph load_graph(std::string_view text);

}  // namespace envsynth
