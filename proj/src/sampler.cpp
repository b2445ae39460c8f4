// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "envsynth/sampler.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"

namespace envsynth {

void ParamClasses::set(const ToolRef& tool, const std::string& param, ParamClass cls) {
  classes_[{tool, param}] = cls;
}

ParamClass ParamClasses::at(const ToolRef& tool, const std::string& param) const {
  auto it = classes_.find({tool, param});
  if (it == classes_.end()) {
    throw SpecError(to_string(tool) + "." + param, "parameter was not classified");
  }
  return it->second;
}

bool ParamClasses::contains(const ToolRef& tool, const std::string& param) const {
  return classes_.count({tool, param}) > 0;
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string prior_label(const ToolRef& owner, const ToolRef& producer) {
  return "prior:" + (producer.env == owner.env ? producer.tool : to_string(producer));
}

// Why `param` needs no new prior, or "" when it does.
std::string valid_reason(const SamplingContext& ctx, const ToolRef& owner,
                         const ParamSpec& param, const VisitedSet& visited) {
  if (param.optional()) return "optional";
  if (ctx.classes.at(owner, param.name) == ParamClass::External) return "external";
  for (const auto& u : visited.order()) {
    if (produces(ctx.catalog.at(u), param, ctx.graph.threshold())) return prior_label(owner, u);
  }
  return {};
}

// Producers u with u -> v in E and an output satisfying `param`.
std::vector<ToolRef> candidate_priors(const SamplingContext& ctx, const ToolRef& v,
                                      const ParamSpec& param) {
  std::vector<ToolRef> out;
  for (const auto& u : ctx.graph.predecessors(v)) {
    if (produces(ctx.catalog.at(u), param, ctx.graph.threshold())) out.push_back(u);
  }
  return out;
}

bool needs_producer(const SamplingContext& ctx, const ToolRef& owner, const ParamSpec& p) {
  return !p.optional() && ctx.classes.at(owner, p.name) == ParamClass::Internal;
}

bool closed_at(const SamplingContext& ctx, const std::vector<ToolRef>& chain, std::size_t i) {
  const ToolSpec& spec = ctx.catalog.at(chain[i]);
  for (const auto& p : spec.inputs) {
    if (!needs_producer(ctx, chain[i], p)) continue;
    bool found = false;
    for (std::size_t j = 0; j < i && !found; ++j) {
      found = produces(ctx.catalog.at(chain[j]), p, ctx.graph.threshold());
    }
    if (!found) return false;
  }
  return true;
}

// Whether some draw of sample_priors could close `v` given `visited`: every
// input still lacking a producer has a candidate that is itself closable one
// level deeper. Sufficient, not necessary: siblings resolved earlier in the
// same call may add producers this check does not see.
bool closable(const SamplingContext& ctx, const ToolRef& v, const VisitedSet& visited,
              int depth, int d_max) {
  const ToolSpec& spec = ctx.catalog.at(v);
  for (const auto& p : spec.inputs) {
    if (!needs_producer(ctx, v, p)) continue;
    bool ok = false;
    for (const auto& u : visited.order()) {
      if (produces(ctx.catalog.at(u), p, ctx.graph.threshold())) {
        ok = true;
        break;
      }
    }
    if (!ok && depth < d_max) {
      for (const auto& u : candidate_priors(ctx, v, p)) {
        if (!visited.contains(u) && closable(ctx, u, visited, depth + 1, d_max)) {
          ok = true;
          break;
        }
      }
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace

ParamClass heuristic_class(const ParamSpec& param) {
  const std::string name = lower(param.name);
  if (name == "id") return ParamClass::Internal;
  for (const char* suffix : {"_id", "_ids", "_token", "_key", "_handle"}) {
    if (ends_with(name, suffix)) return ParamClass::Internal;
  }
  const std::string desc = lower(param.description);
  if (desc.find("identifier") != std::string::npos || desc.find("returned by") != std::string::npos) {
    return ParamClass::Internal;
  }
  return ParamClass::External;
}

ParamClasses classify_params(const std::vector<ToolEntry>& tools, ClassifyMode mode,
                             const RemoteCall& remote) {
  ParamClasses classes;
  for (const auto& t : tools) {
    for (const auto& p : t.spec.inputs) {
      ParamClass cls = heuristic_class(p);
      if (mode == ClassifyMode::Hints && p.classification_hint) {
        cls = *p.classification_hint;
      } else if (mode == ClassifyMode::Remote) {
        if (!remote) throw RemoteError("remote classification needs an endpoint");
        Json reply = remote({{"env", t.env}, {"tool", t.spec.name}, {"param", to_json(p)}});
        std::optional<ParamClass> parsed;
        if (reply.is_object() && reply.contains("class") && reply["class"].is_string()) {
          parsed = param_class_from(reply["class"].get<std::string>());
        }
        if (!parsed) throw RemoteError("classifier returned no valid class for " + p.name);
        cls = *parsed;
      }
      classes.set(t.ref(), p.name, cls);
    }
  }
  return classes;
}

void SamplerConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (d_max < 0) throw ConfigError("d_max must be >= 0");
  if (!(override_p >= 0.0 && override_p <= 1.0)) throw ConfigError("override_p must lie in [0, 1]");
  if (branch_max < 1) throw ConfigError("branch_max must be >= 1");
}

bool produces(const ToolSpec& producer, const ParamSpec& param, double threshold) {
  return std::any_of(producer.outputs.begin(), producer.outputs.end(), [&](const ParamSpec& o) {
    return o.name == param.name || lexical_similarity(o, param) >= threshold;
  });
}

bool is_valid(const SamplingContext& ctx, const ToolRef& owner, const ParamSpec& param,
              const VisitedSet& visited) {
  return !valid_reason(ctx, owner, param, visited).empty();
}

PriorResult sample_priors(const SamplingContext& ctx, VisitedSet& visited, const ToolRef& v,
                          int depth, const SamplerConfig& cfg, Rng& rng) {
  PriorResult out;
  const ToolSpec& spec = ctx.catalog.at(v);
  if (depth >= cfg.d_max) {
    for (const auto& p : spec.inputs) {
      std::string reason = valid_reason(ctx, v, p, visited);
      out.resolutions.push_back({p.name, reason.empty() ? "unresolved" : reason});
    }
    return out;
  }
  for (const auto& param : spec.inputs) {
    std::string reason = valid_reason(ctx, v, param, visited);
    bool overriding = false;
    if (!reason.empty()) {
      if (rng.unit() >= cfg.override_p) {
        out.resolutions.push_back({param.name, reason});
        continue;
      }
      overriding = true;
    }
    auto candidates = candidate_priors(ctx, v, param);
    if (candidates.empty()) {
      out.resolutions.push_back({param.name, reason.empty() ? "unresolved" : reason});
      continue;
    }
    const ToolRef u = candidates[rng.index(candidates.size())];
    bool added = false;
    if (!visited.contains(u) && depth < cfg.d_max) {
      PriorResult sub = sample_priors(ctx, visited, u, depth + 1, cfg, rng);
      visited.insert(u);
      for (auto& p : sub.priors) out.priors.push_back(std::move(p));
      out.priors.push_back({u, depth + 1, std::move(sub.resolutions)});
      added = true;
    }
    if (overriding) {
      out.resolutions.push_back({param.name, added ? "override" : reason});
    } else {
      out.resolutions.push_back({param.name, prior_label(v, u)});
    }
  }
  return out;
}

bool dependency_closed(const SamplingContext& ctx, const std::vector<ToolRef>& chain) {
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (!closed_at(ctx, chain, i)) return false;
  }
  return true;
}

ToolChain topology_sample(const SamplingContext& ctx, const SamplerConfig& cfg,
                          std::optional<ToolRef> start, Rng& rng) {
  cfg.validate();
  const auto& nodes = ctx.graph.nodes();
  if (nodes.empty()) throw ConfigError("cannot sample from an empty graph");
  if (start && !ctx.graph.has_node(*start)) {
    throw ConfigError("start tool " + to_string(*start) + " is not in the graph");
  }

  ToolChain chain;
  VisitedSet visited;
  std::set<ToolRef> rejected;
  std::deque<std::pair<ToolRef, bool>> queue;  // (tool, came from a restart)
  std::size_t fruitless_restarts = 0;

  queue.emplace_back(start ? *start : nodes[rng.index(nodes.size())], false);

  while (visited.size() < cfg.n) {
    if (queue.empty()) {
      std::vector<ToolRef> pool;
      for (const auto& node : nodes) {
        if (!visited.contains(node) && !rejected.count(node)) pool.push_back(node);
      }
      if (pool.empty()) {
        chain.exhausted = true;
        chain.warnings.push_back("graph exhausted after " + std::to_string(chain.tools.size()) +
                                 " tools; requested " + std::to_string(cfg.n));
        break;
      }
      queue.emplace_back(pool[rng.index(pool.size())], true);
    }
    auto [v, from_restart] = queue.front();
    queue.pop_front();
    if (visited.contains(v)) continue;

    VisitedSet before = visited;
    PriorResult pr = sample_priors(ctx, visited, v, 0, cfg, rng);

    std::vector<TraceEntry> group = std::move(pr.priors);
    group.push_back({v, 0, std::move(pr.resolutions)});
    std::vector<ToolRef> extended = chain.tools;
    bool closed = true;
    for (const auto& g : group) {
      extended.push_back(g.tool);
      if (!closed_at(ctx, extended, extended.size() - 1)) {
        closed = false;
        break;
      }
    }
    if (!closed) {
      visited = std::move(before);
      if (rejected.insert(v).second) {
        chain.warnings.push_back("rejected " + to_string(v) +
                                 ": internal inputs cannot be resolved within depth " +
                                 std::to_string(cfg.d_max));
      }
      // Picks that no draw could close only prune the pool; the budget is
      // spent on closable picks that an unlucky draw failed.
      if (from_restart && closable(ctx, v, visited, 0, cfg.d_max) &&
          ++fruitless_restarts > cfg.max_restarts) {
        throw ExhaustedError("restart budget of " + std::to_string(cfg.max_restarts) +
                             " consumed before reaching " + std::to_string(cfg.n) + " tools");
      }
      continue;
    }
    if (from_restart) fruitless_restarts = 0;

    for (auto& g : group) {
      visited.insert(g.tool);
      rejected.erase(g.tool);
      chain.tools.push_back(g.tool);
      chain.trace.push_back(std::move(g));
    }

    std::vector<ToolRef> next;
    for (const auto& s : ctx.graph.successors(v)) {
      if (!visited.contains(s)) next.push_back(s);
    }
    if (next.empty()) continue;
    auto k = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(cfg.branch_max)));
    std::size_t take = std::min(k, next.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::size_t j = i + rng.index(next.size() - i);
      std::swap(next[i], next[j]);
      queue.emplace_back(next[i], false);
    }
  }
  return chain;
}

std::set<std::vector<ToolRef>> enumerate_feasible_chains(const SamplingContext& ctx,
                                                         std::size_t max_len) {
  const auto& nodes = ctx.graph.nodes();
  if (nodes.size() > 8) {
    throw TooLargeError("enumeration is limited to graphs of at most 8 tools, got " +
                        std::to_string(nodes.size()));
  }
  std::set<std::vector<ToolRef>> out;
  std::vector<ToolRef> prefix;
  std::vector<bool> used(nodes.size(), false);
  auto extend = [&](auto&& self) -> void {
    if (prefix.size() >= max_len) return;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (used[i]) continue;
      prefix.push_back(nodes[i]);
      if (closed_at(ctx, prefix, prefix.size() - 1)) {
        used[i] = true;
        out.insert(prefix);
        self(self);
        used[i] = false;
      }
      prefix.pop_back();
    }
  };
  extend(extend);
  return out;
}

std::string save_chain(const ToolChain& chain, const SamplerConfig& cfg,
                       const std::string& graph_ref) {
  Json tools = Json::array();
  for (const auto& t : chain.tools) tools.push_back({{"env", t.env}, {"tool", t.tool}});
  Json trace = Json::array();
  for (const auto& e : chain.trace) {
    Json res = Json::array();
    for (const auto& r : e.resolutions) res.push_back({{"param", r.param}, {"via", r.via}});
    trace.push_back({{"env", e.tool.env}, {"tool", e.tool.tool}, {"depth", e.depth},
                     {"resolutions", res}});
  }
  Json doc = {{"graph_ref", graph_ref},
              {"config",
               {{"n", cfg.n},
                {"d_max", cfg.d_max},
                {"override_p", cfg.override_p},
                {"branch_max", cfg.branch_max},
                {"seed", cfg.seed}}},
              {"chain", tools},
              {"trace", trace},
              {"exhausted", chain.exhausted},
              {"warnings", chain.warnings}};
  return doc.dump(2) + "\n";
}

ToolChain load_chain(std::string_view text) {
  Json doc = parse_json_text(text);
  if (!doc.is_object() || !doc.contains("chain") || !doc["chain"].is_array()) {
    throw ParseError("chain file needs a 'chain' list");
  }
  auto ref_of = [](const Json& v) {
    if (!v.is_object() || !v.contains("env") || !v.contains("tool") || !v["env"].is_string() ||
        !v["tool"].is_string()) {
      throw ParseError("chain entries need string env and tool");
    }
    return ToolRef{v["env"].get<std::string>(), v["tool"].get<std::string>()};
  };
  ToolChain chain;
  for (const auto& t : doc["chain"]) chain.tools.push_back(ref_of(t));
  if (doc.contains("trace") && doc["trace"].is_array()) {
    for (const auto& e : doc["trace"]) {
      TraceEntry entry{ref_of(e), e.value("depth", 0), {}};
      if (e.contains("resolutions")) {
        for (const auto& r : e["resolutions"]) {
          entry.resolutions.push_back({r.value("param", ""), r.value("via", "")});
        }
      }
      chain.trace.push_back(std::move(entry));
    }
  }
  chain.exhausted = doc.value("exhausted", false);
  if (doc.contains("warnings") && doc["warnings"].is_array()) {
    for (const auto& w : doc["warnings"]) {
      if (w.is_string()) chain.warnings.push_back(w.get<std::string>());
    }
  }
  return chain;
}

}  // namespace envsynth
