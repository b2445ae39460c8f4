// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The envsynth Authors

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <ostream>
#include <optional>

#include "envsynth/environment_io.hpp"
#include "envsynth/errors.hpp"
#include "envsynth/protocol.hpp"
#include "envsynth/remote.hpp"
#include "envsynth/reward.hpp"
#include "envsynth/runtime.hpp"
#include "envsynth/sampler.hpp"
#include "envsynth/toolgraph.hpp"
#include "envsynth/trajkit.hpp"
#include "envsynth/verifier.hpp"

namespace envsynth::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEmbeddingVar = "ENVSYNTH_EMBEDDING_URL";
constexpr const char* kRefinerVar = "ENVSYNTH_REFINER_URL";
constexpr const char* kClassifierVar = "ENVSYNTH_CLASSIFIER_URL";

struct Options {
  // build-graph
  std::string env_dir;
  double threshold = kDefaultThreshold;
  std::string provider = "lexical";
  std::string refine = "rules";
  std::optional<std::string> embedding_url;
  std::optional<std::string> refiner_url;
  // sample
  std::string graph;
  SamplerConfig sampler;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> start;
  std::string classify = "heuristic";
  std::optional<std::string> classifier_url;
  // serve
  std::string transport = "stdio";
  std::string host = "127.0.0.1";
  int port = 0;
  // validate
  std::string env_file;
  std::string suite;
  std::string run_id = "r1";
  // score
  std::string pred;
  std::string gold;
  std::string scenario;
  RewardConfig reward;
  // plan
  std::string chain;
  // shared
  std::optional<std::string> out;
};

void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.out) {
    write_text_file(*o.out, text);
  } else {
    out << text;
  }
}

std::string required_url(const char* var, const std::optional<std::string>& flag,
                         const char* what) {
  auto url = endpoint_override(var, flag);
  if (!url) throw ConfigError(std::string(what) + " needs an endpoint URL (flag or " + var + ")");
  return *url;
}

std::optional<ToolRef> parse_ref(const std::optional<std::string>& text) {
  if (!text) return std::nullopt;
  auto slash = text->find('/');
  if (slash == std::string::npos || slash == 0 || slash + 1 == text->size()) {
    throw ConfigError("tool references take the form env/tool");
  }
  return ToolRef{text->substr(0, slash), text->substr(slash + 1)};
}

int cmd_build_graph(const Options& o, std::ostream& out, std::ostream& err) {
  auto envs = load_environment_dir(o.env_dir);
  auto tools = collect_tools(envs);
  std::unique_ptr<SimilarityProvider> provider;
  if (o.provider == "remote") {
    provider = std::make_unique<RemoteEmbeddingProvider>(
        http_remote(required_url(kEmbeddingVar, o.embedding_url, "remote provider")));
  } else {
    provider = std::make_unique<LexicalProvider>();
  }
  DependencyGraph graph = semantic_match(tools, o.threshold, *provider);
  if (o.refine != "none") {
    RemoteCall refiner;
    RefineMode mode = RefineMode::Rules;
    if (o.refine == "remote") {
      mode = RefineMode::Remote;
      refiner = http_remote(required_url(kRefinerVar, o.refiner_url, "remote refinement"));
    }
    RefineResult refined = refine_graph(graph, tools, mode, refiner);
    for (const auto& r : refined.rejected) {
      err << "warning: rejected refinement " << to_string(r.from) << " -> "
                << to_string(r.to) << ": " << r.reason << '\n';
    }
    graph = std::move(refined.graph);
  }
  emit(o, out, save_graph(graph));
  return kOk;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream& err) {
  SamplerConfig cfg = o.sampler;
  cfg.seed = *o.seed;
  cfg.validate();
  DependencyGraph graph = load_graph(read_text_file(o.graph));
  if (graph.empty()) throw ParseError("graph " + o.graph + " has no nodes");
  ToolCatalog catalog(collect_tools(load_environment_dir(o.env_dir)));
  for (const auto& node : graph.nodes()) {
    if (catalog.find(node) == nullptr) {
      throw ParseError("graph node " + to_string(node) + " is not defined in " + o.env_dir);
    }
  }
  ClassifyMode mode = ClassifyMode::Heuristic;
  RemoteCall classifier;
  if (o.classify == "hints") mode = ClassifyMode::Hints;
  if (o.classify == "remote") {
    mode = ClassifyMode::Remote;
    classifier = http_remote(required_url(kClassifierVar, o.classifier_url, "remote classification"));
  }
  ParamClasses classes = classify_params(catalog.entries(), mode, classifier);
  SamplingContext ctx{graph, catalog, classes};
  Rng rng(cfg.seed);
  ToolChain chain = topology_sample(ctx, cfg, parse_ref(o.start), rng);
  for (const auto& w : chain.warnings) err << "warning: " << w << '\n';
  emit(o, out, save_chain(chain, cfg, fs::path(o.graph).filename().string()));
  return kOk;
}

std::atomic<bool> g_signalled{false};

extern "C" void on_terminate(int) { g_signalled = true; }

int cmd_serve(const Options& o, std::istream& in, std::ostream& out, std::ostream& err,
              const std::atomic<bool>* stop) {
  Runtime runtime;
  for (auto& env : load_environment_dir(o.env_dir)) runtime.add_environment(std::move(env));
  if (o.transport == "stdio") {
    serve_stream(runtime, in, out);
    return kOk;
  }
  TcpServer server(runtime, o.host, static_cast<std::uint16_t>(o.port));
  err << "listening on " << o.host << ':' << server.port() << std::endl;
  if (stop != nullptr) {
    server.run(stop);
    return kOk;
  }
  struct sigaction sa {};
  sa.sa_handler = on_terminate;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;  // no SA_RESTART: poll returns on signal
  sigaction(SIGTERM, &sa, nullptr);
  sigaction(SIGINT, &sa, nullptr);
  server.run(&g_signalled);
  return kOk;
}

int cmd_validate(const Options& o, std::ostream& out) {
  EnvironmentSpec env = load_environment_file(o.env_file);
  if (!fs::exists(o.suite)) throw ParseError("suite file " + o.suite + " does not exist");
  TestSuite suite = parse_suite(read_text_file(o.suite));
  Runtime runtime;
  runtime.add_environment(env);
  EnvReport report = verify_environment(env, suite, runtime, o.run_id);
  emit(o, out, to_json(report).dump(2) + "\n");
  return report.verdict ? kOk : kVerdictFail;
}

int cmd_score(const Options& o, std::ostream& out) {
  o.reward.validate();
  EnvironmentSpec env = load_environment_file(o.env_file);
  TrajectoryRecord pred = parse_trajectory(read_text_file(o.pred), &env);
  TrajectoryRecord gold = parse_trajectory(read_text_file(o.gold), &env);
  ScenarioState scenario = parse_json_text(read_text_file(o.scenario));
  Runtime runtime;
  runtime.add_environment(env);
  for (const auto* traj : {&pred, &gold}) {
    if (traj->environment != env.name) {
      throw SpecError("environment", "trajectory targets '" + traj->environment + "', not '" +
                                         env.name + "'");
    }
  }
  ScenarioState gold_final = replay_trajectory(gold, scenario, runtime);
  ScenarioState pred_final = replay_trajectory(pred, scenario, runtime);
  RewardBreakdown b = composite_reward(pred, gold, pred_final, gold_final, env, o.reward);
  emit(o, out, score_report(b, o.reward).dump(2) + "\n");
  return kOk;
}

int cmd_plan(const Options& o, std::ostream& out) {
  ToolChain chain = load_chain(read_text_file(o.chain));
  if (chain.tools.empty()) throw EmptyError("chain " + o.chain + " is empty");
  Rng rng(*o.seed);
  TurnPlan plan = partition_turns(chain.tools, rng);
  emit(o, out, save_plan(plan, fs::path(o.chain).filename().string()));
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err, const std::atomic<bool>* stop) {
  Options o;
  CLI::App app{"Tool-graph construction, chain sampling, environment hosting and scoring",
               "envsynth"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build-graph", "Build the tool dependency graph");
  build->add_option("--env-dir", o.env_dir, "Directory of environment files")->required();
  build->add_option("--threshold", o.threshold, "Similarity threshold")->check(CLI::Range(0.0, 1.0));
  build->add_option("--provider", o.provider)->check(CLI::IsMember({"lexical", "remote"}));
  build->add_option("--refine", o.refine)->check(CLI::IsMember({"rules", "remote", "none"}));
  build->add_option("--embedding-url", o.embedding_url);
  build->add_option("--refiner-url", o.refiner_url);
  build->add_option("--out", o.out);

  auto* sample = app.add_subcommand("sample", "Sample a dependency-closed tool chain");
  sample->add_option("--graph", o.graph)->required();
  sample->add_option("--env-dir", o.env_dir)->required();
  sample->add_option("--seed", o.seed)->required();
  sample->add_option("--n", o.sampler.n)->check(CLI::PositiveNumber);
  sample->add_option("--d-max", o.sampler.d_max)->check(CLI::NonNegativeNumber);
  sample->add_option("--override-p", o.sampler.override_p)->check(CLI::Range(0.0, 1.0));
  sample->add_option("--branch-max", o.sampler.branch_max)->check(CLI::PositiveNumber);
  sample->add_option("--max-restarts", o.sampler.max_restarts);
  sample->add_option("--start", o.start, "Start tool as env/tool");
  sample->add_option("--classify", o.classify)->check(CLI::IsMember({"heuristic", "hints", "remote"}));
  sample->add_option("--classifier-url", o.classifier_url);
  sample->add_option("--out", o.out);

  auto* serve = app.add_subcommand("serve", "Serve environments over the wire protocol");
  serve->add_option("--env-dir", o.env_dir)->required();
  serve->add_option("--transport", o.transport)->check(CLI::IsMember({"stdio", "tcp"}));
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port)->check(CLI::Range(0, 65535));

  auto* validate = app.add_subcommand("validate", "Run a test suite against an environment");
  validate->add_option("--env", o.env_file)->required();
  validate->add_option("--suite", o.suite)->required();
  validate->add_option("--run-id", o.run_id);
  validate->add_option("--report", o.out);

  auto* score = app.add_subcommand("score", "Score a predicted trajectory against gold");
  score->add_option("--pred", o.pred)->required();
  score->add_option("--gold", o.gold)->required();
  score->add_option("--env", o.env_file)->required();
  score->add_option("--scenario", o.scenario)->required();
  score->add_option("--alpha", o.reward.alpha)->check(CLI::Range(0.0, 1.0));
  score->add_option("--gamma", o.reward.gamma)->check(CLI::NonNegativeNumber);
  score->add_option("--float-tolerance", o.reward.float_tolerance)->check(CLI::NonNegativeNumber);
  score->add_option("--masked-path", o.reward.masked_state_paths);
  score->add_option("--out", o.out);

  auto* plan = app.add_subcommand("plan", "Partition a chain into turns");
  plan->add_option("--chain", o.chain)->required();
  plan->add_option("--seed", o.seed)->required();
  plan->add_option("--out", o.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*build) return cmd_build_graph(o, out, err);
    if (*sample) return cmd_sample(o, out, err);
    if (*serve) return cmd_serve(o, in, out, err, stop);
    if (*validate) return cmd_validate(o, out);
    if (*score) return cmd_score(o, out);
    if (*plan) return cmd_plan(o, out);
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ReplayError& e) {
    err << "replay error at step " << e.flat_index() << " (turn " << e.turn() << ", step "
        << e.step() << ", code " << e.code() << "): " << e.what() << '\n';
    return kReplayError;
  } catch (const RemoteError& e) {
    err << "provider error: " << e.what() << '\n';
    return kEnvironmentError;
  } catch (const BindError& e) {
    err << "bind error: " << e.what() << '\n';
    return kEnvironmentError;
  } catch (const ToolError& e) {
    err << "environment error " << e.code() << ": " << e.what() << '\n';
    return kEnvironmentError;
  } catch (const Error& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const Json::exception& e) {
    err << "input error: " << e.what() << '\n';
    return kInputError;
  }
  return kUsage;
}

}  // namespace envsynth::cli
