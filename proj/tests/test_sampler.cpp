// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include <gtest/gtest.h>

#include <random>
#include <set>

#include "envsynth/errors.hpp"
#include "envsynth/sampler.hpp"
#include "support.hpp"

namespace envsynth {
namespace {

using testing::oracle_chains;
using testing::oracle_closed;
using testing::param;
using testing::random_world;
using testing::RandomWorld;
using testing::travel_world;

ToolRef T(const std::string& tool) { return {"travel", tool}; }

std::vector<std::string> names(const std::vector<ToolRef>& refs) {
  std::vector<std::string> out;
  for (const auto& r : refs) out.push_back(r.tool);
  return out;
}

SamplerConfig config(std::size_t n, double override_p = 0.0, std::uint64_t seed = 1) {
  SamplerConfig cfg;
  cfg.n = n;
  cfg.override_p = override_p;
  cfg.seed = seed;
  return cfg;
}

TEST(ClassifyParams, HeuristicExamples) {
  EXPECT_EQ(heuristic_class(param("hotel_id")), ParamClass::Internal);
  EXPECT_EQ(heuristic_class(param("city")), ParamClass::External);
  EXPECT_EQ(heuristic_class(param("ID")), ParamClass::Internal);
  EXPECT_EQ(heuristic_class(param("auth_token")), ParamClass::Internal);
  EXPECT_EQ(heuristic_class(param("file_handle")), ParamClass::Internal);
  EXPECT_EQ(heuristic_class(param("order_ids")), ParamClass::Internal);
  EXPECT_EQ(heuristic_class(param("idea")), ParamClass::External);
  auto ref = param("ref");
  ref.description = "Value returned by create_order";
  EXPECT_EQ(heuristic_class(ref), ParamClass::Internal);
  ref.description = "Unique Identifier of the row";
  EXPECT_EQ(heuristic_class(ref), ParamClass::Internal);
}

TEST(ClassifyParams, HintsTakePrecedenceOnlyInHintsMode) {
  ToolSpec t;
  t.name = "login";
  auto p = param("session_id");
  p.classification_hint = ParamClass::External;
  t.inputs.push_back(p);
  t.inputs.push_back(param("user_id"));
  std::vector<ToolEntry> tools = {{"auth", t}};
  auto hinted = classify_params(tools, ClassifyMode::Hints);
  EXPECT_EQ(hinted.at({"auth", "login"}, "session_id"), ParamClass::External);
  EXPECT_EQ(hinted.at({"auth", "login"}, "user_id"), ParamClass::Internal);
  auto plain = classify_params(tools, ClassifyMode::Heuristic);
  EXPECT_EQ(plain.at({"auth", "login"}, "session_id"), ParamClass::Internal);
  EXPECT_THROW(plain.at({"auth", "login"}, "missing"), SpecError);
}

TEST(ClassifyParams, RemoteModeDelegatesPerParameter) {
  auto w = travel_world();
  std::size_t calls = 0;
  RemoteCall all_external = [&](const Json& req) {
    ++calls;
    EXPECT_TRUE(req.contains("tool"));
    EXPECT_TRUE(req["param"].contains("name"));
    return Json{{"class", "external"}};
  };
  auto classes = classify_params(w.tools, ClassifyMode::Remote, all_external);
  EXPECT_EQ(classes.at(T("book_hotel"), "hotel_id"), ParamClass::External);
  EXPECT_EQ(calls, classes.size());
  RemoteCall dead = [](const Json&) -> Json { throw RemoteError("down"); };
  EXPECT_THROW(classify_params(w.tools, ClassifyMode::Remote, dead), RemoteError);
  RemoteCall junk = [](const Json&) { return Json{{"class", "maybe"}}; };
  EXPECT_THROW(classify_params(w.tools, ClassifyMode::Remote, junk), RemoteError);
}

TEST(ClassifyParams, HeuristicIsTotal) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 20; ++i) {
    auto w = random_world(gen, 1 + gen() % 20, 0.3, 0.7, 0.3);
    std::size_t inputs = 0;
    for (const auto& t : w.tools) {
      inputs += t.spec.inputs.size();
      for (const auto& p : t.spec.inputs) EXPECT_TRUE(w.classes.contains(t.ref(), p.name));
    }
    EXPECT_EQ(w.classes.size(), inputs);
  }
  auto tw = travel_world();
  EXPECT_EQ(tw.classes.size(), 7u);
}

TEST(IsValid, Examples) {
  auto w = travel_world();
  auto ctx = w.ctx();
  VisitedSet none;
  EXPECT_TRUE(is_valid(ctx, T("search_hotels"), *w.catalog.at(T("search_hotels")).input("city"), none));
  VisitedSet after_search;
  after_search.insert(T("search_hotels"));
  const ParamSpec& hotel_id = *w.catalog.at(T("book_hotel")).input("hotel_id");
  EXPECT_TRUE(is_valid(ctx, T("book_hotel"), hotel_id, after_search));
  EXPECT_FALSE(is_valid(ctx, T("book_hotel"), hotel_id, none));
  const ParamSpec& booking_id = *w.catalog.at(T("cancel_booking")).input("booking_id");
  EXPECT_FALSE(is_valid(ctx, T("cancel_booking"), booking_id, none));
  EXPECT_TRUE(is_valid(ctx, T("search_hotels"), *w.catalog.at(T("search_hotels")).input("limit"), none));
}

TEST(SamplePriors, CancelBookingPullsBookingAndOneHotelSource) {
  auto w = travel_world();
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    VisitedSet visited;
    Rng rng(seed);
    auto cfg = config(1, 0.0, seed);
    auto pr = sample_priors(w.ctx(), visited, T("cancel_booking"), 0, cfg, rng);
    std::vector<ToolRef> order;
    for (const auto& p : pr.priors) order.push_back(p.tool);
    auto got = names(order);
    EXPECT_TRUE(got == (std::vector<std::string>{"search_hotels", "book_hotel"}) ||
                got == (std::vector<std::string>{"search_hotels", "get_hotel_details", "book_hotel"}))
        << ::testing::PrintToString(got);
    seen.insert(got);
    ASSERT_EQ(pr.resolutions.size(), 1u);
    EXPECT_EQ(pr.resolutions[0].via, "prior:book_hotel");
    EXPECT_EQ(visited.size(), order.size());
  }
  EXPECT_EQ(seen.size(), 2u);
}

TEST(SamplePriors, AllExternalToolNeedsNothing) {
  auto w = travel_world();
  VisitedSet visited;
  Rng rng(1);
  auto pr = sample_priors(w.ctx(), visited, T("get_weather"), 0, config(1), rng);
  EXPECT_TRUE(pr.priors.empty());
  ASSERT_EQ(pr.resolutions.size(), 1u);
  EXPECT_EQ(pr.resolutions[0].via, "external");
}

TEST(SamplePriors, DepthCapReturnsNothing) {
  auto w = travel_world();
  VisitedSet visited;
  Rng rng(1);
  auto cfg = config(1);
  auto pr = sample_priors(w.ctx(), visited, T("cancel_booking"), cfg.d_max, cfg, rng);
  EXPECT_TRUE(pr.priors.empty());
  EXPECT_EQ(visited.size(), 0u);
  cfg.d_max = 0;
  pr = sample_priors(w.ctx(), visited, T("cancel_booking"), 0, cfg, rng);
  EXPECT_TRUE(pr.priors.empty());
}

// A -> B where B's input a_id is optional: only the override path adds A.
RandomWorld optional_pair() {
  RandomWorld w;
  ToolSpec a, b;
  a.name = "make";
  a.outputs.push_back(param("a_id"));
  b.name = "use";
  b.inputs.push_back(param("a_id", ValueKind::String, false));
  w.tools = {{"x", a}, {"x", b}};
  w.catalog = ToolCatalog(w.tools);
  w.graph = DependencyGraph({{"x", "make"}, {"x", "use"}}, kDefaultThreshold, "lexical");
  w.graph.add_edge({{"x", "make"}, {"x", "use"}, Provenance::Semantic, {}});
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  return w;
}

TEST(SamplePriors, OverrideResolvesValidParameters) {
  auto w = optional_pair();
  VisitedSet v1;
  Rng r1(9);
  auto never = sample_priors(w.ctx(), v1, {"x", "use"}, 0, config(1, 0.0), r1);
  EXPECT_TRUE(never.priors.empty());
  EXPECT_EQ(never.resolutions[0].via, "optional");
  VisitedSet v2;
  Rng r2(9);
  auto always = sample_priors(w.ctx(), v2, {"x", "use"}, 0, config(1, 1.0), r2);
  ASSERT_EQ(always.priors.size(), 1u);
  EXPECT_EQ(always.priors[0].tool.tool, "make");
  EXPECT_EQ(always.resolutions[0].via, "override");
}

TEST(TopologySample, TravelChainFromCancelIsFeasible) {
  auto w = travel_world();
  auto feasible = oracle_chains(w.catalog, w.classes, w.graph, 6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    auto chain = topology_sample(w.ctx(), config(3, 0.0, seed), T("cancel_booking"), rng);
    EXPECT_TRUE(feasible.count(chain.tools)) << ::testing::PrintToString(names(chain.tools));
    EXPECT_GE(chain.tools.size(), 3u);
    EXPECT_LE(chain.tools.size(), 6u);
    EXPECT_EQ(chain.tools.back().tool, "cancel_booking");
    EXPECT_EQ(chain.trace.size(), chain.tools.size());
  }
}

TEST(TopologySample, SingleExternalStart) {
  auto w = travel_world();
  Rng rng(4);
  auto chain = topology_sample(w.ctx(), config(1), T("get_weather"), rng);
  EXPECT_EQ(names(chain.tools), std::vector<std::string>{"get_weather"});
}

TEST(TopologySample, IsolatedToolsReachedByRestart) {
  RandomWorld w;
  ToolSpec a, b;
  a.name = "alpha";
  a.inputs.push_back(param("city"));
  b.name = "beta";
  b.inputs.push_back(param("topic"));
  w.tools = {{"x", a}, {"x", b}};
  w.catalog = ToolCatalog(w.tools);
  w.graph = DependencyGraph({{"x", "alpha"}, {"x", "beta"}}, kDefaultThreshold, "lexical");
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  std::set<std::vector<std::string>> orders;
  for (std::uint64_t seed = 0; seed < 32; ++seed) {
    Rng rng(seed);
    auto chain = topology_sample(w.ctx(), config(2, 0.0, seed), std::nullopt, rng);
    ASSERT_EQ(chain.tools.size(), 2u);
    orders.insert(names(chain.tools));
  }
  EXPECT_EQ(orders.size(), 2u);
}

TEST(TopologySample, ExhaustionYieldsAllNodesAndWarning) {
  auto w = travel_world();
  Rng rng(7);
  auto chain = topology_sample(w.ctx(), config(40), std::nullopt, rng);
  EXPECT_TRUE(chain.exhausted);
  EXPECT_EQ(chain.tools.size(), 6u);
  ASSERT_FALSE(chain.warnings.empty());
  EXPECT_NE(chain.warnings.back().find("exhausted"), std::string::npos);
  EXPECT_TRUE(oracle_closed(w.catalog, w.classes, w.graph.threshold(), chain.tools));
}

TEST(TopologySample, UnclosablePicksOnlyPrunePool) {
  RandomWorld w;
  ToolSpec a, b;
  a.name = "alpha";
  b.name = "beta";
  b.inputs.push_back(param("orphan_token"));
  w.tools = {{"x", a}, {"x", b}};
  w.catalog = ToolCatalog(w.tools);
  w.graph = DependencyGraph({{"x", "alpha"}, {"x", "beta"}}, kDefaultThreshold, "lexical");
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  auto cfg = config(2);
  cfg.max_restarts = 0;
  Rng rng(1);
  auto chain = topology_sample(w.ctx(), cfg, ToolRef{"x", "alpha"}, rng);
  EXPECT_TRUE(chain.exhausted);
  EXPECT_EQ(names(chain.tools), std::vector<std::string>{"alpha"});
}

// beta needs x_id from good (closable) or bad (needs an unproduced token).
// With d_max 1, a restart at beta that draws bad fails by bad luck.
TEST(TopologySample, UnluckyClosablePicksSpendBudget) {
  RandomWorld w;
  ToolSpec alpha, beta, good, bad;
  alpha.name = "alpha";
  beta.name = "beta";
  beta.inputs.push_back(param("x_id"));
  good.name = "good";
  good.outputs.push_back(param("x_id"));
  bad.name = "bad";
  bad.inputs.push_back(param("orphan_token"));
  bad.outputs.push_back(param("x_id"));
  w.tools = {{"x", alpha}, {"x", bad}, {"x", beta}, {"x", good}};
  w.catalog = ToolCatalog(w.tools);
  w.graph = DependencyGraph({{"x", "alpha"}, {"x", "bad"}, {"x", "beta"}, {"x", "good"}},
                            kDefaultThreshold, "lexical");
  w.graph.add_edge({{"x", "good"}, {"x", "beta"}, Provenance::Semantic, {}});
  w.graph.add_edge({{"x", "bad"}, {"x", "beta"}, Provenance::Semantic, {}});
  w.classes = classify_params(w.tools, ClassifyMode::Heuristic);
  std::size_t throws = 0;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    auto cfg = config(3, 0.0, seed);
    cfg.d_max = 1;
    cfg.max_restarts = 0;
    Rng rng(seed);
    try {
      auto chain = topology_sample(w.ctx(), cfg, ToolRef{"x", "alpha"}, rng);
      EXPECT_TRUE(oracle_closed(w.catalog, w.classes, w.graph.threshold(), chain.tools));
    } catch (const ExhaustedError&) {
      ++throws;
      cfg.max_restarts = 16;
      Rng again(seed);
      EXPECT_NO_THROW(topology_sample(w.ctx(), cfg, ToolRef{"x", "alpha"}, again));
    }
  }
  EXPECT_GT(throws, 0u);
}

TEST(TopologySample, RejectsBadConfigAndStart) {
  auto w = travel_world();
  Rng rng(1);
  auto cfg = config(0);
  EXPECT_THROW(topology_sample(w.ctx(), cfg, std::nullopt, rng), ConfigError);
  cfg = config(2, 1.5);
  EXPECT_THROW(topology_sample(w.ctx(), cfg, std::nullopt, rng), ConfigError);
  cfg = config(2);
  cfg.branch_max = 0;
  EXPECT_THROW(topology_sample(w.ctx(), cfg, std::nullopt, rng), ConfigError);
  EXPECT_THROW(topology_sample(w.ctx(), config(2), T("fly"), rng), ConfigError);
}

TEST(TopologySample, DeterministicPerSeed) {
  auto w = travel_world();
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    auto cfg = config(4, 0.1, seed);
    cfg.branch_max = 2;
    Rng a(seed), b(seed);
    auto ca = topology_sample(w.ctx(), cfg, std::nullopt, a);
    auto cb = topology_sample(w.ctx(), cfg, std::nullopt, b);
    EXPECT_EQ(save_chain(ca, cfg, "g.json"), save_chain(cb, cfg, "g.json"));
  }
}

TEST(TopologySample, ZeroOverrideNeverOverrides) {
  std::mt19937_64 gen(21);
  for (int g = 0; g < 20; ++g) {
    auto w = random_world(gen, 3 + gen() % 10, 0.3);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      auto chain = topology_sample(w.ctx(), config(4, 0.0, seed), std::nullopt, rng);
      for (const auto& e : chain.trace) {
        for (const auto& r : e.resolutions) EXPECT_NE(r.via, "override");
      }
    }
  }
}

TEST(TopologySample, PropertiesOnRandomGraphs) {
  std::mt19937_64 gen(8);
  for (int g = 0; g < 40; ++g) {
    std::size_t nodes = 2 + gen() % 19;
    auto w = random_world(gen, nodes, 0.2, 0.6, 0.1, 1);
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      auto cfg = config(1 + gen() % 8, 0.0, seed);
      Rng rng(seed);
      auto chain = topology_sample(w.ctx(), cfg, std::nullopt, rng);
      ASSERT_TRUE(oracle_closed(w.catalog, w.classes, w.graph.threshold(), chain.tools));
      std::set<ToolRef> distinct(chain.tools.begin(), chain.tools.end());
      EXPECT_EQ(distinct.size(), chain.tools.size());
      for (const auto& e : chain.trace) EXPECT_LE(e.depth, cfg.d_max);
      if (chain.exhausted) {
        EXPECT_LE(chain.tools.size(), nodes);
      } else {
        EXPECT_GE(chain.tools.size(), cfg.n);
        EXPECT_LE(chain.tools.size(), cfg.n + static_cast<std::size_t>(cfg.d_max));
      }
    }
  }
}

TEST(EnumerateFeasibleChains, Examples) {
  auto w = travel_world();
  auto two = enumerate_feasible_chains(w.ctx(), 2);
  EXPECT_TRUE(two.count({T("search_hotels"), T("book_hotel")}));
  EXPECT_FALSE(two.count({T("book_hotel"), T("cancel_booking")}));
  EXPECT_FALSE(two.count({T("cancel_booking")}));
  EXPECT_TRUE(two.count({T("get_weather")}));

  RandomWorld single;
  ToolSpec t;
  t.name = "only";
  t.inputs.push_back(param("city"));
  single.tools = {{"x", t}};
  single.catalog = ToolCatalog(single.tools);
  single.graph = DependencyGraph({{"x", "only"}}, kDefaultThreshold, "lexical");
  single.classes = classify_params(single.tools, ClassifyMode::Heuristic);
  EXPECT_EQ(enumerate_feasible_chains(single.ctx(), 3),
            (std::set<std::vector<ToolRef>>{{{"x", "only"}}}));

  RandomWorld empty;
  EXPECT_TRUE(enumerate_feasible_chains(empty.ctx(), 3).empty());

  std::mt19937_64 gen(1);
  auto big = random_world(gen, 9, 0.2);
  EXPECT_THROW(enumerate_feasible_chains(big.ctx(), 3), TooLargeError);
}

TEST(EnumerateFeasibleChains, MatchesPermutationOracle) {
  std::mt19937_64 gen(13);
  for (int g = 0; g < 25; ++g) {
    auto w = random_world(gen, 1 + gen() % 6, 0.35, 0.7, 0.15);
    std::size_t len = 1 + gen() % 6;
    EXPECT_EQ(enumerate_feasible_chains(w.ctx(), len),
              oracle_chains(w.catalog, w.classes, w.graph, len));
  }
  auto tw = travel_world();
  EXPECT_EQ(enumerate_feasible_chains(tw.ctx(), 6), oracle_chains(tw.catalog, tw.classes, tw.graph, 6));
}

TEST(ChainFile, RoundTrips) {
  auto w = travel_world();
  auto cfg = config(5, 0.3, 42);
  Rng rng(42);
  auto chain = topology_sample(w.ctx(), cfg, std::nullopt, rng);
  auto text = save_chain(chain, cfg, "travel_graph.json");
  EXPECT_EQ(load_chain(text), chain);
  Json doc = parse_json_text(text);
  EXPECT_EQ(doc["graph_ref"], "travel_graph.json");
  EXPECT_EQ(doc["config"]["seed"], 42);
  EXPECT_EQ(doc["chain"].size(), chain.tools.size());
  EXPECT_THROW(load_chain("{}"), ParseError);
}

}  // namespace
}  // namespace envsynth
