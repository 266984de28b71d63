#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <porgysim/error.hpp>
#include <porgysim/graph_io.hpp>
#include <porgysim/netgen.hpp>
#include <porgysim/rule_io.hpp>

#include "server.hpp"
#include "simulation.hpp"

namespace porgysim::app {

namespace {

PortGraph load_graph(const std::string& path, std::ostream& err) {
  auto text = read_file(path);
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return graph_from_json(parse_json_text(text));
  std::vector<std::string> warnings;
  auto g = import_edge_list(text, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  return g;
}

std::vector<RewriteRule> load_rules(const std::vector<std::string>& paths) {
  std::vector<RewriteRule> rules;
  for (const auto& p : paths) {
    auto doc = parse_json_text(read_file(p));
    if (doc.is_array()) {
      for (const auto& r : doc) rules.push_back(rule_from_json(r));
    } else {
      rules.push_back(rule_from_json(doc));
    }
  }
  return rules;
}

Model parse_model(const std::string& name) {
  auto m = model_from_string(name);
  if (!m) throw Error(ErrorCode::config_error, fmt::format("unknown model '{}' (expected ic or lt)", name));
  return *m;
}

std::vector<std::string> split_seeds(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void print_summary(std::ostream& out, const Session& s, const RunSummary& sum) {
  fmt::print(out, "model={} states={} rounds={} applications={} active={} status={} leaf={}\n",
             to_string(s.config.model), s.tree->size(), sum.rounds, sum.applications, sum.final_active,
             to_string(sum.status), raw(sum.leaf));
  if (!sum.error.empty()) fmt::print(out, "aborted: {}\n", sum.error);
}

struct CsvRow {
  std::size_t active = 0;
  std::size_t visited = 0;
  std::string efficiency;
};

std::map<std::size_t, CsvRow> read_metrics_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::map<std::size_t, CsvRow> rows;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 4) throw ParseError("expected step,active,visited,efficiency", n, 1, 0);
    try {
      rows[std::stoul(f[0])] = CsvRow{std::stoul(f[1]), std::stoul(f[2]), f[3]};
    } catch (const std::exception&) {
      throw ParseError("non-numeric field", n, 1, 0);
    }
  }
  return rows;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Port-graph rewriting simulator for influence propagation", "porgysim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "porgysim 0.1.0");

  // generate
  auto* gen = app.add_subcommand("generate", "Build a social graph (synthetic or from an edge list)");
  GeneratorConfig gc;
  std::string attachment = "preferential";
  std::string edge_list, gen_out;
  gen->add_option("--nodes", gc.node_count, "Node count")->check(CLI::PositiveNumber);
  gen->add_option("--m", gc.edges_per_new_node, "Edges per new node")->check(CLI::PositiveNumber);
  gen->add_option("--triad", gc.triad_closure, "Triad closure probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--attachment", attachment, "preferential|uniform")
      ->check(CLI::IsMember({"preferential", "uniform"}));
  gen->add_option("--seed", gc.seed, "Generator seed");
  gen->add_option("--edge-list", edge_list, "Import `u v [p_uv p_vu]` lines instead");
  gen->add_option("--out,-o", gen_out, "Output graph JSON (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "Run a simulation and export its trace");
  std::string graph_path, config_path, model_name, strategy_path, seeds, p_spec, theta_spec, mode, reload, out_dir;
  std::vector<std::string> rule_paths;
  std::optional<std::uint64_t> rng_seed;
  std::optional<std::size_t> rounds;
  bool strict_sigma = false, fold = false;
  run->add_option("--graph", graph_path, "Graph JSON or edge list")->required();
  run->add_option("--config", config_path, "Model config JSON");
  run->add_option("--model", model_name, "ic|lt");
  run->add_option("--strategy", strategy_path, "Strategy file (default: the model's)");
  run->add_option("--rules", rule_paths, "Rule JSON files (replace the model's rules)");
  run->add_option("--seeds", seeds, "Comma-separated seed nodes");
  run->add_option("--p", p_spec, "Edge probability: const:x, uniform:lo,hi or file:path");
  run->add_option("--theta", theta_spec, "LT threshold distribution");
  run->add_option("--rng", rng_seed, "RNG seed");
  run->add_option("--rounds", rounds, "Maximum propagation steps");
  run->add_option("--mode", mode, "random|deterministic")->check(CLI::IsMember({"random", "deterministic"}));
  run->add_flag("--strict-sigma", strict_sigma, "Activate only when sigma > 1");
  run->add_option("--reload", reload, "Reload edge probabilities from this file every round");
  run->add_flag("--fold", fold, "Keep only the final state of each step");
  run->add_option("--out,-o", out_dir, "Output directory")->required();

  // step
  auto* step = app.add_subcommand("step", "Continue a saved session");
  std::string session_path, step_out;
  std::size_t step_rounds = 1;
  step->add_option("--session", session_path, "session.json")->required();
  step->add_option("--rounds", step_rounds, "Propagation steps");
  step->add_option("--out,-o", step_out, "Output directory (default: update the session in place)");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Export metrics or the trace of a saved session");
  std::string metrics_session, format = "csv";
  std::optional<std::uint64_t> leaf;
  metrics->add_option("--session", metrics_session, "session.json")->required();
  metrics->add_option("--leaf", leaf, "Leaf state (default: the cursor)");
  metrics->add_option("--format", format, "csv|jsonl|dot")->check(CLI::IsMember({"csv", "jsonl", "dot"}));

  // compare
  auto* compare = app.add_subcommand("compare", "Compare two metrics.csv files step by step");
  std::string csv_a, csv_b;
  compare->add_option("a", csv_a, "First metrics.csv")->required();
  compare->add_option("b", csv_b, "Second metrics.csv")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "Check a graph, rule or strategy file");
  std::string v_graph, v_rule, v_strategy, v_model;
  validate->add_option("--graph", v_graph);
  validate->add_option("--rule", v_rule);
  validate->add_option("--strategy", v_strategy);
  validate->add_option("--model", v_model, "Check strategy rule names against this model");

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP/WebSocket session service");
  const char* env_addr = std::getenv("PORGYSIM_ADDR");
  std::string addr = env_addr ? env_addr : "127.0.0.1:8080";
  std::string persist;
  int threads = 4;
  serve->add_option("--addr", addr, "host:port (env PORGYSIM_ADDR)");
  serve->add_option("--persist", persist, "Directory for session snapshots");
  serve->add_option("--threads", threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    auto code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      PortGraph g;
      if (!edge_list.empty()) {
        std::vector<std::string> warnings;
        g = import_edge_list(read_file(edge_list), &warnings);
        for (const auto& w : warnings) err << "warning: " << w << "\n";
      } else {
        gc.attachment = attachment == "uniform" ? Attachment::uniform : Attachment::preferential;
        g = generate(gc);
      }
      auto text = graph_to_json(g).dump(1) + "\n";
      if (gen_out.empty()) out << text;
      else {
        write_file(gen_out, text);
        fmt::print(out, "wrote {} ({} nodes, {} edges)\n", gen_out, g.node_count(), g.edge_count());
      }
      return 0;
    }

    if (*run) {
      SessionSpec spec;
      spec.graph = load_graph(graph_path, err);
      ojson cfg = config_path.empty() ? ojson::object() : parse_json_text(read_file(config_path));
      if (!model_name.empty()) cfg["model"]["type"] = to_string(parse_model(model_name));
      if (!seeds.empty()) cfg["model"]["seeds"] = split_seeds(seeds);
      if (!mode.empty()) cfg["model"]["mode"] = mode;
      if (strict_sigma) cfg["model"]["strict_sigma"] = true;
      if (rounds) cfg["model"]["max_rounds"] = *rounds;
      if (!p_spec.empty()) cfg["init"]["p"] = p_spec;
      if (!theta_spec.empty()) cfg["init"]["theta"] = theta_spec;
      if (rng_seed) cfg["rng"]["seed"] = *rng_seed;
      spec.config = model_config_from_json(cfg);
      if (!strategy_path.empty()) spec.strategy_text = read_file(strategy_path);
      spec.rules = load_rules(rule_paths);
      if (!reload.empty()) spec.reload_path = reload;
      spec.tree_options.keep_intermediate = !fold;

      auto session = create_session("run", std::move(spec));
      auto outcomes = advance(*session, session->config.max_rounds);
      auto sum = summarize(*session, outcomes);
      write_run_outputs(*session, out_dir);
      print_summary(out, *session, sum);
      return sum.status == RunStatus::aborted ? 1 : 0;
    }

    if (*step) {
      auto session = load_session(session_path);
      auto outcomes = advance(*session, step_rounds);
      auto sum = summarize(*session, outcomes);
      if (step_out.empty()) save_session(*session, session_path);
      else write_run_outputs(*session, step_out);
      print_summary(out, *session, sum);
      return sum.status == RunStatus::aborted ? 1 : 0;
    }

    if (*metrics) {
      auto session = load_session(metrics_session);
      StateId target = leaf ? StateId{*leaf} : session->cursor;
      if (!session->tree->contains(target)) throw Error(ErrorCode::unknown_state, fmt::format("no state {}", raw(target)));
      auto fmt_kind = format == "csv" ? ExportFormat::csv_metrics
                      : format == "jsonl" ? ExportFormat::jsonl_events
                                          : ExportFormat::dot_tree;
      if (fmt_kind == ExportFormat::csv_metrics) {
        out << metrics_csv(compute_metrics(*session->tree, target, to_string(session->config.model)));
      } else {
        out << export_trace(*session->tree, target, fmt_kind);
      }
      return 0;
    }

    if (*compare) {
      auto a = read_metrics_csv(csv_a);
      auto b = read_metrics_csv(csv_b);
      out << "step,active_a,active_b,visited_a,visited_b,efficiency_a,efficiency_b\n";
      std::set<std::size_t> steps;
      for (const auto& [k, _] : a) steps.insert(k);
      for (const auto& [k, _] : b) steps.insert(k);
      for (auto k : steps) {
        auto ia = a.find(k);
        auto ib = b.find(k);
        auto cell = [](auto it, auto& m, auto get) { return it == m.end() ? std::string() : get(it->second); };
        auto act = [](const CsvRow& r) { return std::to_string(r.active); };
        auto vis = [](const CsvRow& r) { return std::to_string(r.visited); };
        auto eff = [](const CsvRow& r) { return r.efficiency; };
        fmt::print(out, "{},{},{},{},{},{},{}\n", k, cell(ia, a, act), cell(ib, b, act), cell(ia, a, vis),
                   cell(ib, b, vis), cell(ia, a, eff), cell(ib, b, eff));
      }
      if (!a.empty() && !b.empty()) {
        fmt::print(out, "# final active: {} vs {}\n", a.rbegin()->second.active, b.rbegin()->second.active);
      }
      return 0;
    }

    if (*validate) {
      if (v_graph.empty() && v_rule.empty() && v_strategy.empty()) {
        err << "validate: give at least one of --graph, --rule, --strategy\n";
        return 2;
      }
      if (!v_graph.empty()) {
        auto g = load_graph(v_graph, err);
        fmt::print(out, "graph ok: {} nodes, {} ports, {} edges\n", g.node_count(), g.port_count(), g.edge_count());
      }
      if (!v_rule.empty()) {
        for (const auto& r : load_rules({v_rule})) {
          fmt::print(out, "rule ok: {} ({} lhs, {} rhs elements)\n", r.name(), r.lhs().size(), r.rhs().size());
        }
      }
      if (!v_strategy.empty()) {
        auto program = parse_strategy(read_file(v_strategy));
        if (!v_model.empty()) check_rules(program, build_rules(parse_model(v_model)));
        fmt::print(out, "strategy ok: {} instructions\n", program.instructions.size());
      }
      return 0;
    }

    if (*serve) {
      auto [host, port] = parse_address(addr);
      ApiService service(persist.empty() ? std::nullopt : std::optional<std::string>(persist));
      Server server(service, host, port, threads);
      server.start();
      fmt::print(out, "listening on {}:{}\n", host, server.port());
      out.flush();
      server.wait();
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(err, "error[{}]: {}\n", to_string(e.code()), e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    fmt::print(err, "error[parse_error]: {}\n", e.what());
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error[io_error]: {}\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace porgysim::app
