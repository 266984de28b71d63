#include <benchmark/benchmark.h>

#include <porgysim/models.hpp>
#include <porgysim/netgen.hpp>
#include <porgysim/rewrite.hpp>
#include <porgysim/strategy.hpp>
#include <porgysim/trace.hpp>

using namespace porgysim;

namespace {

PortGraph network(std::size_t nodes) {
  GeneratorConfig gen;
  gen.node_count = nodes;
  gen.seed = 11;
  return generate(gen);
}

ModelConfig config(Model model) {
  ModelConfig c;
  c.model = model;
  c.seeds = {"n1", "n2", "n3"};
  c.probability = Distribution::parse("uniform:0,1");
  if (model == Model::lt) c.theta = Distribution::parse("uniform:0,1");
  c.rng_seed = 5;
  return c;
}

void BM_FindTrialMatches(benchmark::State& state) {
  auto g = network(static_cast<std::size_t>(state.range(0)));
  auto cfg = config(Model::ic);
  SeededRandom rng(cfg.rng_seed);
  auto located = setup_simulation(g, cfg, rng);
  auto rules = build_ic_rules();
  const auto& trial = rules.at("IC trial d2s");
  for (auto _ : state) {
    auto matches = find_matches(trial, located, rng, MatchMode::deterministic);
    benchmark::DoNotOptimize(matches.data());
  }
}
BENCHMARK(BM_FindTrialMatches)->Arg(100)->Arg(300)->Arg(1000);

void BM_ApplyTrial(benchmark::State& state) {
  auto g = network(300);
  auto cfg = config(Model::ic);
  SeededRandom rng(cfg.rng_seed);
  auto located = setup_simulation(g, cfg, rng);
  auto rules = build_ic_rules();
  const auto& trial = rules.at("IC trial d2s");
  auto matches = find_matches(trial, located, rng, MatchMode::deterministic);
  if (matches.empty()) {
    state.SkipWithError("no trial match");
    return;
  }
  for (auto _ : state) {
    auto out = apply_rule(trial, matches.front(), located, rng);
    benchmark::DoNotOptimize(out.touched.data());
  }
}
BENCHMARK(BM_ApplyTrial);

void BM_FullRun(benchmark::State& state) {
  auto model = state.range(0) == 0 ? Model::ic : Model::lt;
  auto g = network(300);
  auto cfg = config(model);
  auto rules = build_rules(model);
  auto program = model_strategy(model);
  for (auto _ : state) {
    SeededRandom rng(cfg.rng_seed);
    auto start = setup_simulation(g, cfg, rng);
    DerivationTree tree(start);
    RunOptions options;
    auto rounds = run_rounds(program, start, tree.root(), rules, rng, options, tree, 50);
    benchmark::DoNotOptimize(rounds.size());
  }
  state.SetLabel(model == Model::ic ? "ic" : "lt");
}
BENCHMARK(BM_FullRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
