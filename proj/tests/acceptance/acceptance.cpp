// Acceptance suite: one PASS/FAIL line per primary criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include <porgysim/influence.hpp>
#include <porgysim/models.hpp>
#include <porgysim/netgen.hpp>
#include <porgysim/rewrite.hpp>
#include <porgysim/strategy.hpp>

#include "app/cli.hpp"
#include "app/session.hpp"
#include "oracles.hpp"

using namespace porgysim;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Sim {
  std::unique_ptr<app::Session> session;
  std::vector<StrategyOutcome> outcomes;

  LocatedGraph final_state() const { return session->tree->state(session->cursor); }
  std::size_t nonempty_rounds() const {
    return static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return !o.log.empty(); }));
  }
  std::string events() const {
    return export_trace(*session->tree, session->cursor, ExportFormat::jsonl_events);
  }
};

Sim simulate(const PortGraph& g, const ModelConfig& cfg, std::optional<std::uint64_t> match_seed = {}) {
  app::SessionSpec spec;
  spec.graph = g;
  spec.config = cfg;
  Sim sim;
  sim.session = app::create_session("acceptance", std::move(spec));
  if (match_seed) sim.session->rng = SeededRandom(*match_seed);
  sim.outcomes = app::advance(*sim.session, cfg.max_rounds);
  return sim;
}

std::set<ElementId> active_nodes(const PortGraph& g) {
  std::set<ElementId> out;
  for (auto n : g.nodes()) {
    auto a = g.property(n, "active");
    if (a && a->as_bool()) out.insert(n);
  }
  return out;
}

ModelConfig config(Model model, std::vector<std::string> seeds, const std::string& p,
                   std::optional<std::string> theta, std::uint64_t rng_seed) {
  ModelConfig c;
  c.model = model;
  c.seeds = std::move(seeds);
  c.probability = Distribution::parse(p);
  if (theta) c.theta = Distribution::parse(*theta);
  c.rng_seed = rng_seed;
  c.max_rounds = 1000;
  return c;
}

std::vector<std::string> pick_seeds(std::mt19937_64& rng, std::size_t nodes, std::size_t count) {
  std::vector<std::size_t> idx(nodes);
  std::iota(idx.begin(), idx.end(), 1);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(count, nodes); ++i) out.push_back("n" + std::to_string(idx[i]));
  return out;
}

/// Half netgen graphs (connected), half sparse random graphs (usually not).
std::vector<PortGraph> random_graphs(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PortGraph> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(5, 300)(rng);
    if (i % 2 == 0) {
      GeneratorConfig gc;
      gc.node_count = n;
      gc.edges_per_new_node = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
      gc.triad_closure = std::uniform_real_distribution<double>(0.0, 0.8)(rng);
      gc.attachment = rng() % 2 ? Attachment::uniform : Attachment::preferential;
      gc.seed = rng();
      if (gc.node_count <= gc.edges_per_new_node + 1) gc.node_count = gc.edges_per_new_node + 2;
      out.push_back(generate(gc));
    } else {
      std::set<std::pair<std::size_t, std::size_t>> pairs;
      std::size_t m = std::uniform_int_distribution<std::size_t>(0, n + n / 2)(rng);
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (std::size_t k = 0; k < m; ++k) {
        auto u = pick(rng), v = pick(rng);
        if (u == v || pairs.count({u, v}) || pairs.count({v, u})) continue;
        pairs.insert({u, v});
      }
      out.push_back(oracle::social_graph(n, {pairs.begin(), pairs.end()}));
    }
  }
  return out;
}

std::vector<ElementId> seed_ids(const PortGraph& g, const std::vector<std::string>& names) {
  std::vector<ElementId> ids;
  for (const auto& s : names) ids.push_back(oracle::node_named(g, s));
  return ids;
}

// ---------------------------------------------------------------------------

Verdict influence_math() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> prob(0.0, 0.99);
  double worst = 0;
  std::size_t checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> set(std::uniform_int_distribution<std::size_t>(0, 10)(rng));
    for (auto& p : set) p = prob(rng);
    double joint = joint_influence(set);
    int ops = std::uniform_int_distribution<int>(0, 20)(rng);
    for (int k = 0; k < ops; ++k) {
      int op = std::uniform_int_distribution<int>(0, 2)(rng);
      if (set.empty()) op = 0;
      if (op == 0 && set.size() < 10) {
        double p = prob(rng);
        set.push_back(p);
        joint = add_influence(joint, p);
      } else if (op == 1 || (op == 0 && !set.empty())) {
        auto i = std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng);
        joint = remove_influence(joint, set[i]);
        set.erase(set.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        auto i = std::uniform_int_distribution<std::size_t>(0, set.size() - 1)(rng);
        double p = prob(rng);
        joint = replace_influence(joint, set[i], p);
        set[i] = p;
      }
      worst = std::max(worst, std::abs(joint - oracle::joint_from_scratch(set)));
      ++checks;
    }
  }
  return {worst <= 1e-9, fmt::format("{} incremental updates, max error {:.3g}", checks, worst)};
}

Verdict match_oracle() {
  std::mt19937_64 rng(2);
  std::vector<RewriteRule> rules;
  for (auto model : {Model::ic, Model::lt}) {
    auto lib = build_rules(model);
    for (const auto& name : lib.names()) {
      if (name.find("trial") != std::string::npos) rules.push_back(lib.at(name));
    }
  }
  std::size_t compared = 0, total_matches = 0;
  SeededRandom shuffle_rng(3);
  for (int i = 0; i < 200; ++i) {
    auto located = oracle::random_location(rng, oracle::random_attributed_graph(rng, 8));
    for (const auto& rule : rules) {
      auto expected = oracle::brute_force_matches(rule, located);
      auto got = find_matches(rule, located, shuffle_rng, MatchMode::deterministic);
      std::vector<std::vector<ElementId>> hosts;
      for (const auto& m : got) hosts.push_back(m.host);
      if (hosts != expected) {
        return {false, fmt::format("graph {} rule '{}': engine {} matches, brute force {}", i, rule.name(),
                                   hosts.size(), expected.size())};
      }
      auto shuffled = find_matches(rule, located, shuffle_rng, MatchMode::random);
      std::vector<std::vector<ElementId>> rh;
      for (const auto& m : shuffled) rh.push_back(m.host);
      std::sort(rh.begin(), rh.end(), [](const auto& a, const auto& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                            [](ElementId x, ElementId y) { return raw(x) < raw(y); });
      });
      if (rh != expected) return {false, fmt::format("graph {} rule '{}': random mode differs", i, rule.name())};
      ++compared;
      total_matches += expected.size();
    }
  }
  return {true, fmt::format("{} graph/rule pairs, {} matches, both orientations", compared, total_matches)};
}

Verdict ic_certainty() {
  auto graphs = random_graphs(50, 4);
  std::mt19937_64 rng(5);
  std::size_t total_nodes = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    auto seeds = pick_seeds(rng, g.node_count(), 1 + rng() % 3);
    auto sim = simulate(g, config(Model::ic, seeds, "const:1", std::nullopt, i));
    auto dist = oracle::bfs_distances(g, seed_ids(g, seeds));
    std::set<ElementId> reachable;
    int max_d = 0;
    for (auto [n, d] : dist) {
      reachable.insert(n);
      max_d = std::max(max_d, d);
    }
    auto active = active_nodes(sim.final_state().graph);
    if (active != reachable) {
      return {false, fmt::format("graph {}: {} active vs {} reachable", i, active.size(), reachable.size())};
    }
    if (sim.nonempty_rounds() != static_cast<std::size_t>(max_d)) {
      return {false, fmt::format("graph {}: {} nonempty rounds vs max distance {}", i, sim.nonempty_rounds(), max_d)};
    }
    total_nodes += g.node_count();
  }
  return {true, fmt::format("50 graphs, {} nodes, active set = reachable set, rounds = max distance", total_nodes)};
}

Verdict ic_one_shot() {
  auto graphs = random_graphs(50, 4);
  std::mt19937_64 rng(6);
  std::size_t trials = 0, edges = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const auto& g = graphs[i];
    auto seeds = pick_seeds(rng, g.node_count(), 1 + rng() % 3);
    auto sim = simulate(g, config(Model::ic, seeds, "uniform:0,1", std::nullopt, 100 + i));
    std::set<std::uint64_t> edge_ids;
    for (auto e : g.edges()) edge_ids.insert(raw(e));
    std::map<std::pair<std::uint64_t, std::string>, int> per_direction;
    std::size_t run_trials = 0;
    for (const auto& ev : oracle::parse_events(sim.events())) {
      if (ev.rule.find("trial") == std::string::npos) continue;
      ++run_trials;
      for (auto id : ev.image) {
        if (edge_ids.count(id) && ++per_direction[{id, ev.rule}] > 1) {
          return {false, fmt::format("graph {}: edge {} tried twice by '{}'", i, id, ev.rule)};
        }
      }
    }
    if (run_trials > 2 * g.edge_count()) {
      return {false, fmt::format("graph {}: {} trials > 2|E| = {}", i, run_trials, 2 * g.edge_count())};
    }
    trials += run_trials;
    edges += g.edge_count();
  }
  return {true, fmt::format("{} trials over {} edges in 50 runs, no repeated (edge, direction)", trials, edges)};
}

Verdict lt_order_independence() {
  std::mt19937_64 rng(7);
  std::size_t runs = 0;
  for (int graph = 0; graph < 5; ++graph) {
    GeneratorConfig gc;
    gc.node_count = 150 + 30 * static_cast<std::size_t>(graph);
    gc.seed = 40 + static_cast<std::uint64_t>(graph);
    auto g = generate(gc);
    auto seeds = pick_seeds(rng, g.node_count(), 3);
    auto cfg = config(Model::lt, seeds, "uniform:0.1,0.6", "uniform:0.2,0.9", 500 + graph);
    std::optional<std::set<ElementId>> ref_active;
    std::size_t ref_rounds = 0;
    for (std::uint64_t k = 0; k < 10; ++k) {
      auto sim = simulate(g, cfg, 9000 + k);
      auto active = active_nodes(sim.final_state().graph);
      if (!ref_active) {
        ref_active = active;
        ref_rounds = sim.nonempty_rounds();
      } else if (active != *ref_active || sim.nonempty_rounds() != ref_rounds) {
        return {false, fmt::format("graph {} order seed {}: {} active / {} rounds vs {} / {}", graph, k,
                                   active.size(), sim.nonempty_rounds(), ref_active->size(), ref_rounds)};
      }
      ++runs;
    }
  }
  return {true, fmt::format("5 setups x 10 match orders ({} runs): identical active sets and round counts", runs)};
}

Verdict round_simultaneity() {
  std::mt19937_64 rng(8);
  std::size_t events = 0, runs = 0;
  for (int i = 0; i < 10; ++i) {
    GeneratorConfig gc;
    gc.node_count = 100 + 20 * static_cast<std::size_t>(i);
    gc.seed = 70 + static_cast<std::uint64_t>(i);
    auto g = generate(gc);
    auto seeds = pick_seeds(rng, g.node_count(), 2);
    for (auto model : {Model::ic, Model::lt}) {
      auto cfg = config(model, seeds, "uniform:0.2,0.9", std::string("uniform:0.1,0.7"), 300 + i);
      auto sim = simulate(g, cfg);
      auto root = sim.session->tree->state(sim.session->tree->root());
      auto log = oracle::parse_events(sim.events());
      auto problem = oracle::check_round_simultaneity(log, root.graph, active_nodes(root.graph));
      if (!problem.empty()) return {false, fmt::format("{} run {}: {}", to_string(model), i, problem)};
      events += log.size();
      ++runs;
    }
  }
  return {true, fmt::format("{} IC/LT runs, {} logged applications, no same-round feedback", runs, events)};
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

int cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"porgysim"};
  for (auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int rc = app::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != 0) std::cerr << err.str();
  return rc;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / fmt::format("porgysim-acceptance-{}", name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Verdict determinism() {
  auto dir = scratch("determinism");
  if (cli({"generate", "--nodes", "300", "--seed", "11", "--out", (dir / "g.json").string()}) != 0) {
    return {false, "generate failed"};
  }
  for (const char* model : {"ic", "lt"}) {
    for (const char* run : {"a", "b"}) {
      std::vector<std::string> args{"run", "--graph", (dir / "g.json").string(), "--model", model,
                                    "--seeds", "n1,n2,n3", "--p", "uniform:0.1,0.9", "--theta", "uniform:0.3,0.9",
                                    "--rng", "42", "--out", (dir / model / run).string()};
      if (cli(args) != 0) return {false, fmt::format("{} run {} failed", model, run)};
    }
    for (const char* file : {"metrics.csv", "events.jsonl"}) {
      if (slurp(dir / model / "a" / file) != slurp(dir / model / "b" / file)) {
        return {false, fmt::format("{} {} differs between runs", model, file)};
      }
    }
  }
  auto bytes = fs::file_size(dir / "ic" / "a" / "events.jsonl") + fs::file_size(dir / "lt" / "a" / "events.jsonl");
  return {true, fmt::format("IC and LT: metrics.csv and events.jsonl byte-identical ({} event bytes)", bytes)};
}

Verdict star_metrics() {
  auto dir = scratch("star");
  auto g = oracle::social_graph(4, {{0, 1}, {0, 2}, {0, 3}});
  write_file((dir / "g.json").string(), graph_to_json(g).dump());
  if (cli({"run", "--graph", (dir / "g.json").string(), "--model", "ic", "--seeds", "n1", "--p", "const:1.0", "--rng",
           "42", "--rounds", "10", "--out", (dir / "trace").string()}) != 0) {
    return {false, "run failed"};
  }
  auto rows = oracle::parse_metrics_csv(slurp(dir / "trace" / "metrics.csv"));
  std::string got;
  for (const auto& r : rows) got += fmt::format("({},{},{},'{}')", r.step, r.active, r.visited, r.efficiency);
  bool ok = rows.size() == 2 && rows[0].active == 1 && rows[1].active == 4 && rows[0].visited == 0 &&
            rows[1].visited == 3 && rows[0].efficiency.empty() && !rows[1].efficiency.empty() &&
            std::abs(std::stod(rows[1].efficiency) - 4.0 / 3.0) < 1e-12;
  return {ok, "rows " + got};
}

Verdict headline() {
  GeneratorConfig gc;
  gc.node_count = 300;
  gc.seed = 2024;
  auto g = generate(gc);
  std::mt19937_64 rng(9);
  int ic_wins = 0;
  std::vector<std::vector<long>> gaps;
  std::size_t longest = 0;
  for (int run = 0; run < 30; ++run) {
    auto seeds = pick_seeds(rng, g.node_count(), 3);
    std::uint64_t setup = 1000 + static_cast<std::uint64_t>(run);
    auto ic = simulate(g, config(Model::ic, seeds, "uniform:0.3,0.9", std::string("uniform:0.5,0.9"), setup));
    auto lt = simulate(g, config(Model::lt, seeds, "uniform:0.3,0.9", std::string("uniform:0.5,0.9"), setup));
    auto ic_rows = compute_metrics(*ic.session->tree, ic.session->cursor).rows;
    auto lt_rows = compute_metrics(*lt.session->tree, lt.session->cursor).rows;
    if (ic_rows.back().active > lt_rows.back().active) ++ic_wins;
    std::size_t len = std::max(ic_rows.size(), lt_rows.size());
    std::vector<long> gap(len);
    for (std::size_t r = 0; r < len; ++r) {
      auto a = ic_rows[std::min(r, ic_rows.size() - 1)].active;
      auto b = lt_rows[std::min(r, lt_rows.size() - 1)].active;
      gap[r] = static_cast<long>(a) - static_cast<long>(b);
    }
    longest = std::max(longest, len);
    gaps.push_back(std::move(gap));
  }
  std::vector<double> medians;
  for (std::size_t r = 0; r < longest; ++r) {
    std::vector<long> col;
    for (const auto& gap : gaps) col.push_back(gap[std::min(r, gap.size() - 1)]);
    std::sort(col.begin(), col.end());
    medians.push_back(col.size() % 2 ? col[col.size() / 2] : (col[col.size() / 2 - 1] + col[col.size() / 2]) / 2.0);
  }
  bool monotone = std::is_sorted(medians.begin(), medians.end());
  std::string series;
  for (double m : medians) series += fmt::format("{}{}", series.empty() ? "" : ",", m);
  return {ic_wins >= 24 && monotone,
          fmt::format("IC > LT in {}/30 runs; median gap per round [{}] {}", ic_wins, series,
                      monotone ? "non-decreasing" : "NOT non-decreasing")};
}

Verdict strategy_parser() {
  auto expected = [](const std::string& prefix) {
    StrategyProgram p;
    Instruction a;
    a.op = Instruction::Op::repeat;
    Instruction b = a, d = a;
    if (prefix == "IC") {
      a.rule = "IC trial d2s";
      b.rule = "IC trial s2d";
    } else {
      a.rule = "LT trial s2d";
      b.rule = "LT trial d2s";
    }
    d.rule = prefix + " activate";
    Instruction c;
    c.op = Instruction::Op::set_pos;
    c.filter.kind = ElementKind::node;
    c.filter.predicate.attribute = "sigma";
    c.filter.predicate.cmp = Comparator::ge;
    c.filter.predicate.operand = Value(1.0);
    p.instructions = {a, b, c, d};
    return p;
  };
  for (auto [file, prefix] : {std::pair{"ic.strat", "IC"}, std::pair{"lt.strat", "LT"}}) {
    auto text = slurp(fs::path(PORGYSIM_ASSET_DIR) / file);
    auto program = parse_strategy(text);
    if (!(program == expected(prefix))) return {false, fmt::format("{} parses to an unexpected program", file)};
    auto printed = print_strategy(program);
    auto again = parse_strategy(printed);
    if (!(again == program) || print_strategy(again) != printed) {
      return {false, fmt::format("{} round-trip not idempotent", file)};
    }
  }
  return {true, "both listings parse to the 4-instruction programs; parse-print-parse is stable"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
    double limit_seconds;  // 0: no limit
  };
  std::vector<Criterion> criteria{
      {"influence-math", influence_math, 1.0},
      {"match-oracle", match_oracle, 10.0},
      {"ic-certainty", ic_certainty, 30.0},
      {"ic-one-shot", ic_one_shot, 0},
      {"lt-order-independence", lt_order_independence, 0},
      {"round-simultaneity", round_simultaneity, 0},
      {"determinism", determinism, 0},
      {"metrics-star", star_metrics, 0},
      {"ic-vs-lt-headline", headline, 120.0},
      {"strategy-parser", strategy_parser, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt::format("{:.2f}s", secs);
    if (c.limit_seconds > 0) {
      timing += fmt::format(" (limit {}s)", c.limit_seconds);
      if (secs >= c.limit_seconds) {
        v.pass = false;
        v.detail += "; over time limit";
      }
    }
    std::cout << fmt::format("{} {:<22} {} [{}]", v.pass ? "PASS" : "FAIL", c.name, v.detail, timing) << std::endl;
    failed += !v.pass;
  }
  std::cout << fmt::format("{}/{} criteria passed", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
