#include "porgysim/netgen.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>

#include "porgysim/error.hpp"
#include "porgysim/random.hpp"

namespace porgysim {

namespace {

struct Builder {
  PortGraph graph;
  std::vector<ElementId> in_port, out_port;

  std::size_t add_node(const std::string& name) {
    auto n = graph.add_node(Record::from_entries({{"name", Value(name)}}));
    in_port.push_back(graph.add_port(n, Record::from_entries({{"name", Value("In")}})));
    out_port.push_back(graph.add_port(n, Record::from_entries({{"name", Value("Out")}})));
    return in_port.size() - 1;
  }

  /// Edge u.In - v.Out.
  ElementId link(std::size_t u, std::size_t v, Record record = {}) {
    return graph.add_edge(in_port[u], out_port[v], std::move(record));
  }
};

}  // namespace

PortGraph generate(const GeneratorConfig& config) {
  SeededRandom rng(config.seed);
  Builder b;
  const std::size_t n = config.node_count;
  const std::size_t m = std::max<std::size_t>(1, config.edges_per_new_node);
  for (std::size_t i = 0; i < n; ++i) b.add_node(fmt::format("n{}", i + 1));

  std::vector<std::set<std::size_t>> adj(n);
  std::vector<std::size_t> endpoints;  // degree-weighted pool
  auto connect = [&](std::size_t u, std::size_t v) {
    if (rng.index(2) == 0) b.link(u, v); else b.link(v, u);
    adj[u].insert(v);
    adj[v].insert(u);
    endpoints.push_back(u);
    endpoints.push_back(v);
  };

  std::size_t core = std::min(n, m + 1);
  for (std::size_t i = 0; i < core; ++i) {
    for (std::size_t j = i + 1; j < core; ++j) connect(i, j);
  }

  for (std::size_t u = core; u < n; ++u) {
    auto pick_attached = [&]() -> std::size_t {
      if (config.attachment == Attachment::preferential && !endpoints.empty()) {
        return endpoints[rng.index(endpoints.size())];
      }
      return rng.index(u);
    };
    std::size_t last = u;
    std::size_t links = std::min(m, u);
    for (std::size_t k = 0; k < links; ++k) {
      std::size_t target = u;
      if (k > 0 && last != u && rng.open_unit() <= config.triad_closure) {
        std::vector<std::size_t> open;
        for (auto x : adj[last]) {
          if (x != u && !adj[u].count(x)) open.push_back(x);
        }
        if (!open.empty()) target = open[rng.index(open.size())];
      }
      for (int attempt = 0; target == u && attempt < 64; ++attempt) {
        auto t = pick_attached();
        if (t != u && !adj[u].count(t)) target = t;
      }
      if (target == u) {
        std::vector<std::size_t> free;
        for (std::size_t x = 0; x < u; ++x) {
          if (!adj[u].count(x)) free.push_back(x);
        }
        if (free.empty()) break;
        target = free[rng.index(free.size())];
      }
      connect(u, target);
      last = target;
    }
  }
  return std::move(b.graph);
}

namespace {

std::optional<double> probability(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return v;
}

}  // namespace

PortGraph import_edge_list(std::string_view text, std::vector<std::string>* warnings) {
  Builder b;
  std::map<std::string, std::size_t, std::less<>> index;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  auto node_of = [&](std::string_view name) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    auto i = b.add_node(std::string(name));
    index.emplace(std::string(name), i);
    return i;
  };

  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (offset <= text.size()) {
    auto end = text.find('\n', offset);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(offset, end - offset);
    ++line_no;
    auto line_start = offset;
    offset = end + 1;

    std::vector<std::string_view> cols;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      auto s = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > s) cols.push_back(line.substr(s, i - s));
    }
    if (cols.empty() || cols[0].starts_with('#')) continue;
    auto fail = [&](const std::string& msg) {
      throw ParseError(fmt::format("edge list line {}: {}", line_no, msg), line_no, 1, line_start);
    };
    if (cols.size() != 2 && cols.size() != 4) fail(fmt::format("expected 'u v' or 'u v p_uv p_vu', got {} field(s)", cols.size()));
    if (cols[0] == cols[1]) fail("self-loop");
    std::optional<double> p_uv, p_vu;
    if (cols.size() == 4) {
      p_uv = probability(cols[2]);
      p_vu = probability(cols[3]);
      if (!p_uv || !p_vu) fail("probabilities must be numbers in [0, 1]");
    }
    auto u = node_of(cols[0]);
    auto v = node_of(cols[1]);
    if (!seen.insert(std::minmax(u, v)).second) {
      if (warnings) warnings->push_back(fmt::format("line {}: duplicate pair {} {} ignored", line_no, cols[0], cols[1]));
      continue;
    }
    Record rec;
    if (p_uv) {
      rec.insert("p_i2o", Value(*p_uv));
      rec.insert("p_o2i", Value(*p_vu));
    }
    b.link(u, v, std::move(rec));
  }
  return std::move(b.graph);
}

}  // namespace porgysim
