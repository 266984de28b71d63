#include "oracles.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace oracle {

using namespace porgysim;

double joint_from_scratch(const std::vector<double>& ps) {
  double keep = 1.0;
  for (double p : ps) keep *= 1.0 - p;
  return 1.0 - keep;
}

std::vector<std::vector<ElementId>> brute_force_matches(const RewriteRule& rule, const LocatedGraph& host) {
  const auto& lhs = rule.lhs();
  const auto& g = host.graph;
  auto all = g.all_elements();
  std::vector<std::vector<ElementId>> found;
  std::vector<ElementId> assign(lhs.size());

  auto local = [&](ElementId rule_id) { return assign[rule.lhs_index(rule_id)]; };

  std::function<void(std::size_t)> extend = [&](std::size_t i) {
    if (i == lhs.size()) {
      // structure
      for (std::size_t k = 0; k < lhs.size(); ++k) {
        const auto& pe = lhs[k];
        const auto& he = g.element(assign[k]);
        if (pe.kind == ElementKind::port && he.owner != local(pe.owner)) return;
        if (pe.kind == ElementKind::edge) {
          auto a = local(pe.ends[0]);
          auto b = local(pe.ends[1]);
          bool same = (he.ends[0] == a && he.ends[1] == b) || (he.ends[0] == b && he.ends[1] == a);
          if (!same) return;
        }
      }
      Bindings bindings;
      for (std::size_t k = 0; k < lhs.size(); ++k) {
        if (!satisfies(g.element(assign[k]).record, lhs[k].predicates, bindings, kDefaultEpsilon)) return;
      }
      bool meets = false;
      for (auto id : assign) {
        if (host.banned.contains(id)) return;
        meets = meets || host.position.contains(id);
      }
      if (!meets) return;
      found.push_back(assign);
      return;
    }
    for (auto id : all) {
      if (g.element(id).kind != lhs[i].kind) continue;
      if (std::find(assign.begin(), assign.begin() + static_cast<std::ptrdiff_t>(i), id) !=
          assign.begin() + static_cast<std::ptrdiff_t>(i)) {
        continue;
      }
      assign[i] = id;
      extend(i + 1);
    }
  };
  extend(0);
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                        [](ElementId x, ElementId y) { return raw(x) < raw(y); });
  });
  return found;
}

std::map<ElementId, std::set<ElementId>> node_adjacency(const PortGraph& g) {
  std::map<ElementId, std::set<ElementId>> adj;
  for (auto n : g.nodes()) adj[n];
  for (auto e : g.edges()) {
    const auto& edge = g.element(e);
    auto u = g.element(edge.ends[0]).owner;
    auto v = g.element(edge.ends[1]).owner;
    if (u == v) continue;
    adj[u].insert(v);
    adj[v].insert(u);
  }
  return adj;
}

std::map<ElementId, int> bfs_distances(const PortGraph& g, const std::vector<ElementId>& seeds) {
  auto adj = node_adjacency(g);
  std::map<ElementId, int> dist;
  std::vector<ElementId> frontier;
  for (auto s : seeds) {
    if (dist.emplace(s, 0).second) frontier.push_back(s);
  }
  int d = 0;
  while (!frontier.empty()) {
    ++d;
    std::vector<ElementId> next;
    for (auto u : frontier) {
      for (auto v : adj[u]) {
        if (dist.emplace(v, d).second) next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  return dist;
}

PortGraph social_graph(std::size_t nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  PortGraph g;
  std::vector<ElementId> in(nodes), out(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    auto n = g.add_node(Record::from_entries({{"name", Value("n" + std::to_string(i + 1))}}));
    in[i] = g.add_port(n, Record::from_entries({{"name", Value("In")}}));
    out[i] = g.add_port(n, Record::from_entries({{"name", Value("Out")}}));
  }
  for (auto [u, v] : edges) g.add_edge(in[u], out[v]);
  return g;
}

ElementId node_named(const PortGraph& g, const std::string& name) {
  for (auto n : g.nodes()) {
    auto v = g.property(n, "name");
    if (v && v->kind() == ValueKind::text && v->as_text() == name) return n;
  }
  return kNoElement;
}

PortGraph random_attributed_graph(std::mt19937_64& rng, std::size_t max_nodes) {
  std::uniform_int_distribution<std::size_t> count(1, max_nodes);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PortGraph g;
  std::size_t n = count(rng);
  std::vector<ElementId> ports;
  for (std::size_t i = 0; i < n; ++i) {
    auto node = g.add_node(Record::from_entries({
        {"name", Value("n" + std::to_string(i + 1))},
        {"active", Value(coin(rng))},
        {"visited", Value(coin(rng))},
        {"sigma", Value(unit(rng) * 2.0)},
    }));
    ports.push_back(g.add_port(node, Record::from_entries({{"name", Value("In")}})));
    ports.push_back(g.add_port(node, Record::from_entries({{"name", Value("Out")}})));
  }
  std::uniform_int_distribution<std::size_t> pick(0, ports.size() - 1);
  std::size_t tries = std::uniform_int_distribution<std::size_t>(0, 2 * n + 2)(rng);
  for (std::size_t t = 0; t < tries; ++t) {
    auto a = ports[pick(rng)];
    auto b = ports[pick(rng)];
    if (a == b || g.edge_between(a, b)) continue;
    g.add_edge(a, b,
               Record::from_entries({{"marked", Value(unit(rng) < 0.3)},
                                     {"p_i2o", Value(unit(rng))},
                                     {"p_o2i", Value(unit(rng))}}));
  }
  return g;
}

LocatedGraph random_location(std::mt19937_64& rng, PortGraph g) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto all = g.all_elements();
  auto located = LocatedGraph::whole(std::move(g));
  if (unit(rng) < 0.6) {
    std::vector<ElementId> pos;
    for (auto id : all) {
      if (unit(rng) < 0.3) pos.push_back(id);
    }
    located = set_position(located, pos);
  }
  if (unit(rng) < 0.5) {
    std::vector<ElementId> ban;
    for (auto id : all) {
      if (unit(rng) < 0.15) ban.push_back(id);
    }
    located = set_ban(located, ban);
  }
  return located;
}

std::vector<Event> parse_events(const std::string& jsonl) {
  std::vector<Event> out;
  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    Event e;
    e.step = j.at("step").get<std::size_t>();
    e.app = j.at("app").get<std::size_t>();
    e.rule = j.at("rule").get<std::string>();
    e.parent = j.at("parent").get<std::uint64_t>();
    e.child = j.at("child").get<std::uint64_t>();
    e.image = j.at("image").get<std::vector<std::uint64_t>>();
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CsvRow> parse_metrics_csv(const std::string& csv) {
  std::vector<CsvRow> rows;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(CsvRow{std::stoul(f.at(0)), std::stoul(f.at(1)), std::stoul(f.at(2)), f.at(3)});
  }
  return rows;
}

std::string check_round_simultaneity(const std::vector<Event>& events, const PortGraph& initial,
                                     const std::set<ElementId>& initially_active) {
  std::set<std::uint64_t> nodes;
  for (auto n : initial.nodes()) nodes.insert(raw(n));
  std::set<std::uint64_t> active_before;
  for (auto a : initially_active) active_before.insert(raw(a));
  std::set<std::uint64_t> activated_now;
  std::size_t step = 0;
  for (const auto& e : events) {
    if (e.step < step) return "steps go backwards at app " + std::to_string(e.app);
    if (e.step != step) {
      active_before.insert(activated_now.begin(), activated_now.end());
      activated_now.clear();
      step = e.step;
    }
    std::vector<std::uint64_t> touched;
    for (auto id : e.image) {
      if (nodes.count(id)) touched.push_back(id);
    }
    if (e.rule.find("activate") != std::string::npos) {
      if (touched.size() != 1) return "activation image without a single node";
      activated_now.insert(touched[0]);
      continue;
    }
    std::size_t sources = 0;
    for (auto n : touched) {
      if (activated_now.count(n)) {
        return "step " + std::to_string(e.step) + ": node " + std::to_string(n) +
               " activated in this step takes part in a later trial";
      }
      sources += active_before.count(n);
    }
    if (touched.size() != 2 || sources != 1) {
      return "step " + std::to_string(e.step) + ": trial without exactly one previously active endpoint";
    }
  }
  return {};
}

}  // namespace oracle
