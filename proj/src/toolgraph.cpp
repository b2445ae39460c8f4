// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/toolgraph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"
#include "envsynth/remote.hpp"

namespace envsynth {

std::vector<ToolEntry> collect_tools(const std::vector<EnvironmentSpec>& envs) {
  std::vector<ToolEntry> out;
  for (const auto& env : envs) {
    for (const auto& tool : env.tools) out.push_back({env.name, tool});
  }
  std::sort(out.begin(), out.end(),
            [](const ToolEntry& a, const ToolEntry& b) { return a.ref() < b.ref(); });
  return out;
}

ToolCatalog::ToolCatalog(std::vector<ToolEntry> tools) : tools_(std::move(tools)) {
  for (std::size_t i = 0; i < tools_.size(); ++i) index_.emplace(tools_[i].ref(), i);
}

const ToolSpec* ToolCatalog::find(const ToolRef& ref) const {
  auto it = index_.find(ref);
  return it == index_.end() ? nullptr : &tools_[it->second].spec;
}

const ToolSpec& ToolCatalog::at(const ToolRef& ref) const {
  const ToolSpec* spec = find(ref);
  if (spec == nullptr) throw SpecError(to_string(ref), "tool not in catalog");
  return *spec;
}

std::set<std::string> name_tokens(std::string_view name) {
  std::vector<std::string> raw;
  std::string cur;
  auto flush = [&]() {
    if (!cur.empty()) raw.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(name[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (std::isupper(c) && !cur.empty()) {
      unsigned char prev = static_cast<unsigned char>(name[i - 1]);
      bool next_lower = i + 1 < name.size() &&
                        std::islower(static_cast<unsigned char>(name[i + 1]));
      // fooBar | HTTPServer -> HTTP, Server
      if (std::islower(prev) || std::isdigit(prev) || (std::isupper(prev) && next_lower)) {
        flush();
      }
    }
    cur.push_back(static_cast<char>(c));
  }
  flush();

  std::set<std::string> tokens;
  for (auto& t : raw) {
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (t.size() > 1 && t.back() == 's') t.pop_back();
    tokens.insert(std::move(t));
  }
  return tokens;
}

double lexical_similarity(std::string_view a, std::string_view b) {
  auto ta = name_tokens(a);
  auto tb = name_tokens(b);
  if (ta.empty() && tb.empty()) return a == b ? 1.0 : 0.0;
  std::size_t common = 0;
  for (const auto& t : ta) common += tb.count(t);
  std::size_t uni = ta.size() + tb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double lexical_similarity(const ParamSpec& a, const ParamSpec& b) {
  return lexical_similarity(a.name, b.name);
}

RemoteCall http_remote(std::string url) {
  return [url = std::move(url)](const Json& request) { return post_json(url, request); };
}

std::vector<double> LexicalProvider::score(std::span<const ParamPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(lexical_similarity(*p.output, *p.input));
  return out;
}

std::vector<double> RemoteEmbeddingProvider::score(std::span<const ParamPair> pairs) const {
  std::map<std::string, std::size_t> text_index;
  auto text_of = [](const ParamSpec* p) {
    return p->description.empty() ? p->name : p->name + ": " + p->description;
  };
  for (const auto& p : pairs) {
    text_index.emplace(text_of(p.output), 0);
    text_index.emplace(text_of(p.input), 0);
  }
  if (pairs.empty()) return {};
  Json texts = Json::array();
  std::size_t i = 0;
  for (auto& [text, idx] : text_index) {
    idx = i++;
    texts.push_back(text);
  }

  Json reply;
  try {
    reply = call_({{"texts", texts}});
  } catch (const RemoteError& e) {
    throw ProviderError(e.what());
  }
  if (!reply.is_object() || !reply.contains("vectors") || !reply["vectors"].is_array() ||
      reply["vectors"].size() != texts.size()) {
    throw ProviderError("embedding provider returned a malformed reply");
  }
  std::vector<std::vector<double>> vectors;
  for (const auto& v : reply["vectors"]) {
    if (!v.is_array()) throw ProviderError("embedding vector is not a list");
    std::vector<double> vec;
    for (const auto& x : v) {
      if (!x.is_number()) throw ProviderError("embedding vector holds a non-number");
      vec.push_back(x.get<double>());
    }
    vectors.push_back(std::move(vec));
  }

  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ProviderError("embedding dimensions differ");
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
  };

  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back(cosine(vectors[text_index.at(text_of(p.output))],
                         vectors[text_index.at(text_of(p.input))]));
  }
  return out;
}

const char* to_string(Provenance p) noexcept {
  return p == Provenance::Refined ? "refined" : "semantic";
}

DependencyGraph::DependencyGraph(std::vector<ToolRef> nodes, double threshold,
                                 std::string provider)
    : nodes_(std::move(nodes)), threshold_(threshold), provider_(std::move(provider)) {
  std::sort(nodes_.begin(), nodes_.end());
  nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());
}

bool DependencyGraph::has_node(const ToolRef& ref) const {
  return std::binary_search(nodes_.begin(), nodes_.end(), ref);
}

void DependencyGraph::add_edge(Edge edge) {
  if (edge.from == edge.to) throw SpecError(to_string(edge.from), "self-loop");
  if (!has_node(edge.from)) throw SpecError(to_string(edge.from), "unknown edge source");
  if (!has_node(edge.to)) throw SpecError(to_string(edge.to), "unknown edge target");
  auto key = std::make_pair(edge.from, edge.to);
  edges_.insert_or_assign(std::move(key), std::move(edge));
}

bool DependencyGraph::remove_edge(const ToolRef& from, const ToolRef& to) {
  return edges_.erase({from, to}) > 0;
}

bool DependencyGraph::has_edge(const ToolRef& from, const ToolRef& to) const {
  return edges_.count({from, to}) > 0;
}

const Edge* DependencyGraph::edge(const ToolRef& from, const ToolRef& to) const {
  auto it = edges_.find({from, to});
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<Edge> DependencyGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edges_.size());
  for (const auto& [_, e] : edges_) out.push_back(e);
  return out;
}

std::vector<ToolRef> DependencyGraph::successors(const ToolRef& v) const {
  std::vector<ToolRef> out;
  for (auto it = edges_.lower_bound({v, ToolRef{}}); it != edges_.end() && it->first.first == v;
       ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

std::vector<ToolRef> DependencyGraph::predecessors(const ToolRef& v) const {
  std::vector<ToolRef> out;
  for (const auto& [key, _] : edges_) {
    if (key.second == v) out.push_back(key.first);
  }
  return out;
}

DependencyGraph semantic_match(const std::vector<ToolEntry>& tools, double threshold,
                               const SimilarityProvider& provider) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("threshold must lie in [0, 1]");
  }
  std::vector<ToolRef> nodes;
  for (const auto& t : tools) nodes.push_back(t.ref());
  DependencyGraph graph(nodes, threshold, provider.name());

  struct Slot {
    std::size_t from, to;
    const ParamSpec* out;
    const ParamSpec* in;
  };
  std::vector<Slot> slots;
  std::vector<ParamPair> pairs;
  for (std::size_t i = 0; i < tools.size(); ++i) {
    for (std::size_t j = 0; j < tools.size(); ++j) {
      if (i == j) continue;
      for (const auto& po : tools[i].spec.outputs) {
        for (const auto& pi : tools[j].spec.inputs) {
          slots.push_back({i, j, &po, &pi});
          pairs.push_back({&po, &pi});
        }
      }
    }
  }
  std::vector<double> scores = provider.score(pairs);
  if (scores.size() != pairs.size()) throw ProviderError("provider returned a wrong score count");

  std::map<std::pair<std::size_t, std::size_t>, std::vector<Witness>> found;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (scores[k] >= threshold) {
      found[{slots[k].from, slots[k].to}].push_back(
          {slots[k].out->name, slots[k].in->name, scores[k]});
    }
  }
  for (auto& [key, witnesses] : found) {
    graph.add_edge({tools[key.first].ref(), tools[key.second].ref(), Provenance::Semantic,
                    std::move(witnesses)});
  }
  return graph;
}

namespace {

std::optional<std::pair<std::string, std::string>> edge_pair(const Json& v) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_string() || !v[1].is_string()) return std::nullopt;
  return std::make_pair(v[0].get<std::string>(), v[1].get<std::string>());
}

}  // namespace

RefineResult refine_graph(const DependencyGraph& graph, const std::vector<ToolEntry>& tools,
                          RefineMode mode, const RemoteCall& remote) {
  RefineResult result{graph, 0, 0, {}};
  std::map<std::string, std::vector<const ToolEntry*>> by_env;
  for (const auto& t : tools) by_env[t.env].push_back(&t);

  if (mode == RefineMode::Rules) {
    for (const auto& [env, members] : by_env) {
      for (const ToolEntry* sink : members) {
        if (!sink->spec.inputs.empty() || !sink->spec.outputs.empty()) continue;
        for (const ToolEntry* other : members) {
          if (other == sink || result.graph.has_edge(other->ref(), sink->ref())) continue;
          result.graph.add_edge({other->ref(), sink->ref(), Provenance::Refined, {}});
          ++result.added;
        }
      }
    }
    return result;
  }

  if (!remote) throw RefinerError("remote refinement needs an endpoint");
  for (const auto& [env, members] : by_env) {
    Json tool_docs = Json::array();
    Json adjacency = Json::object();
    for (const ToolEntry* t : members) {
      tool_docs.push_back(to_json(t->spec, false));
      Json succ = Json::array();
      for (const auto& s : graph.successors(t->ref())) {
        if (s.env == env) succ.push_back(s.tool);
      }
      adjacency[t->spec.name] = succ;
    }
    Json reply;
    try {
      reply = remote({{"environment", env}, {"tools", tool_docs}, {"adjacency", adjacency}});
    } catch (const RemoteError& e) {
      throw RefinerError(e.what());
    }
    if (!reply.is_object()) throw RefinerError("refiner reply is not a record");

    auto process = [&](const char* key, bool adding) {
      auto it = reply.find(key);
      if (it == reply.end()) return;
      if (!it->is_array()) throw RefinerError(std::string("refiner '") + key + "' is not a list");
      for (const auto& item : *it) {
        auto pair = edge_pair(item);
        if (!pair) {
          result.rejected.push_back({{env, item.dump()}, {env, ""}, "malformed edge"});
          continue;
        }
        ToolRef from{env, pair->first};
        ToolRef to{env, pair->second};
        if (!result.graph.has_node(from) || !result.graph.has_node(to)) {
          result.rejected.push_back({from, to, "unknown tool"});
        } else if (from == to) {
          result.rejected.push_back({from, to, "self-loop"});
        } else if (adding) {
          if (!result.graph.has_edge(from, to)) {
            result.graph.add_edge({from, to, Provenance::Refined, {}});
            ++result.added;
          }
        } else if (result.graph.remove_edge(from, to)) {
          ++result.removed;
        } else {
          result.rejected.push_back({from, to, "no such edge"});
        }
      }
    };
    process("remove", false);
    process("add", true);
  }
  return result;
}

std::string save_graph(const DependencyGraph& graph) {
  auto ref_json = [](const ToolRef& r) { return Json{{"env", r.env}, {"tool", r.tool}}; };
  Json nodes = Json::array();
  for (const auto& n : graph.nodes()) nodes.push_back(ref_json(n));
  Json edges = Json::array();
  for (const auto& e : graph.edges()) {
    Json w = Json::array();
    for (const auto& x : e.witnesses) w.push_back(Json::array({x.output, x.input, x.score}));
    edges.push_back({{"from", ref_json(e.from)},
                     {"to", ref_json(e.to)},
                     {"provenance", to_string(e.provenance)},
                     {"witnesses", w}});
  }
  Json doc = {{"nodes", nodes},
              {"edges", edges},
              {"threshold", graph.threshold()},
              {"provider", graph.provider()}};
  return doc.dump(2) + "\n";
}

DependencyGraph load_graph(std::string_view text) {
  Json doc = parse_json_text(text);
  auto fail = [](const std::string& why) -> void { throw ParseError("graph file: " + why); };
  if (!doc.is_object()) fail("expected a record");
  auto ref_of = [&](const Json& v) {
    if (!v.is_object() || !v.contains("env") || !v.contains("tool") || !v["env"].is_string() ||
        !v["tool"].is_string()) {
      fail("tool reference needs string env and tool");
    }
    return ToolRef{v["env"].get<std::string>(), v["tool"].get<std::string>()};
  };
  std::vector<ToolRef> nodes;
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) fail("missing nodes list");
  for (const auto& n : doc["nodes"]) nodes.push_back(ref_of(n));
  double threshold = kDefaultThreshold;
  if (doc.contains("threshold")) {
    if (!doc["threshold"].is_number()) fail("threshold must be a number");
    threshold = doc["threshold"].get<double>();
  }
  std::string provider = "lexical";
  if (doc.contains("provider")) {
    if (!doc["provider"].is_string()) fail("provider must be a string");
    provider = doc["provider"].get<std::string>();
  }
  DependencyGraph graph(nodes, threshold, provider);
  if (doc.contains("edges")) {
    if (!doc["edges"].is_array()) fail("edges must be a list");
    for (const auto& e : doc["edges"]) {
      if (!e.is_object() || !e.contains("from") || !e.contains("to")) fail("edge needs from and to");
      Edge edge{ref_of(e["from"]), ref_of(e["to"]), Provenance::Semantic, {}};
      std::string prov = e.value("provenance", "semantic");
      if (prov == "refined") {
        edge.provenance = Provenance::Refined;
      } else if (prov != "semantic") {
        fail("unknown provenance '" + prov + "'");
      }
      if (e.contains("witnesses")) {
        for (const auto& w : e["witnesses"]) {
          if (!w.is_array() || w.size() != 3 || !w[0].is_string() || !w[1].is_string() ||
              !w[2].is_number()) {
            fail("witness must be [output, input, score]");
          }
          edge.witnesses.push_back(
              {w[0].get<std::string>(), w[1].get<std::string>(), w[2].get<double>()});
        }
      }
      try {
        graph.add_edge(std::move(edge));
      } catch (const SpecError& err) {
        fail(err.what());
      }
    }
  }
  return graph;
}

}  // namespace envsynth
