#include "porgysim/models.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

const char* to_string(Model model) noexcept { return model == Model::ic ? "ic" : "lt"; }

std::optional<Model> model_from_string(std::string_view name) noexcept {
  if (name == "ic" || name == "IC") return Model::ic;
  if (name == "lt" || name == "LT") return Model::lt;
  return std::nullopt;
}

// --- rules -------------------------------------------------------------------

namespace {

PropertyPredicate eq(std::string attr, Value v) {
  PropertyPredicate p;
  p.attribute = std::move(attr);
  p.cmp = Comparator::eq;
  p.operand = std::move(v);
  return p;
}

/// Small helper for assembling rules with rule-local ids.
class RuleBuilder {
 public:
  ElementId lhs_node(std::string name, std::vector<PropertyPredicate> preds) {
    PatternElement e;
    e.kind = ElementKind::node;
    e.id = fresh();
    e.name = std::move(name);
    e.predicates = std::move(preds);
    lhs_.push_back(e);
    return e.id;
  }
  ElementId lhs_port(ElementId owner, std::string name, const char* port_name) {
    PatternElement e;
    e.kind = ElementKind::port;
    e.id = fresh();
    e.name = std::move(name);
    e.owner = owner;
    e.predicates = {eq("name", port_name)};
    lhs_.push_back(e);
    return e.id;
  }
  ElementId lhs_edge(std::string name, ElementId a, ElementId b, std::vector<PropertyPredicate> preds) {
    PatternElement e;
    e.kind = ElementKind::edge;
    e.id = fresh();
    e.name = std::move(name);
    e.ends = {a, b};
    e.predicates = std::move(preds);
    lhs_.push_back(e);
    return e.id;
  }
  ElementId rhs_node(std::string name, std::vector<std::pair<std::string, std::string>> sets = {}) {
    return rhs(ElementKind::node, std::move(name), {}, {}, std::move(sets));
  }
  ElementId rhs_port(ElementId owner, std::string name, ElementId from) {
    auto id = rhs(ElementKind::port, std::move(name), owner, {}, {});
    auto bridge = fresh();
    ports_.push_back(ArrowPort{bridge, "bridge"});
    edges_.push_back(ArrowEdge{bridge, from});
    edges_.push_back(ArrowEdge{bridge, id});
    return id;
  }
  ElementId rhs_edge(std::string name, ElementId a, ElementId b,
                     std::vector<std::pair<std::string, std::string>> sets = {}) {
    return rhs(ElementKind::edge, std::move(name), {}, {a, b}, std::move(sets));
  }

  RewriteRule build(std::string name) {
    return RewriteRule(std::move(name), lhs_, rhs_, ports_, edges_);
  }

 private:
  ElementId fresh() { return ElementId{next_++}; }

  ElementId rhs(ElementKind kind, std::string name, ElementId owner, std::array<ElementId, 2> ends,
                std::vector<std::pair<std::string, std::string>> sets) {
    TemplateElement e;
    e.kind = kind;
    e.id = fresh();
    e.name = std::move(name);
    e.owner = owner;
    e.ends = ends;
    for (auto& [attr, expr] : sets) e.assignments.push_back(Assignment{attr, Expression::parse(expr)});
    rhs_.push_back(std::move(e));
    return rhs_.back().id;
  }

  std::uint64_t next_ = 1;
  std::vector<PatternElement> lhs_;
  std::vector<TemplateElement> rhs_;
  std::vector<ArrowPort> ports_;
  std::vector<ArrowEdge> edges_;
};

// "d2s": the active node sits on the In side of the edge, which carries p_i2o.
struct Orientation {
  const char* suffix;
  const char* active_port;
  const char* passive_port;
  const char* p_attr;
  const char* applied_attr;
};
constexpr Orientation kD2S{"d2s", "In", "Out", "p_i2o", "applied_i2o"};
constexpr Orientation kS2D{"s2d", "Out", "In", "p_o2i", "applied_o2i"};

template <class Sets>
RewriteRule trial_rule(const std::string& name, const Orientation& o, Sets node_sets, Sets edge_sets) {
  RuleBuilder b;
  auto v = b.lhs_node("v", {eq("active", true)});
  auto vp = b.lhs_port(v, "vp", o.active_port);
  auto w = b.lhs_node("w", {eq("active", false)});
  auto wp = b.lhs_port(w, "wp", o.passive_port);
  b.lhs_edge("e", vp, wp, {eq("marked", false)});
  auto v2 = b.rhs_node("v'");
  auto vp2 = b.rhs_port(v2, "vp'", vp);
  auto w2 = b.rhs_node("w'", node_sets);
  auto wp2 = b.rhs_port(w2, "wp'", wp);
  b.rhs_edge("e'", vp2, wp2, edge_sets);
  return b.build(name);
}

RewriteRule activate_rule(const std::string& name) {
  RuleBuilder b;
  auto w = b.lhs_node("w", {eq("visited", true), eq("active", false)});
  auto wp = b.lhs_port(w, "wp", "In");
  auto w2 = b.rhs_node("w'", {{"active", "true"}});
  b.rhs_port(w2, "wp'", wp);
  return b.build(name);
}

using Sets = std::vector<std::pair<std::string, std::string>>;

RewriteRule ic_trial(const Orientation& o) {
  Sets node{{"visited", "true"},
            {"sigma", fmt::format("max(edge(v,w).property(\"{}\")/random(1), node(w).property(\"sigma\"))", o.p_attr)}};
  Sets edge{{"marked", "true"}};
  return trial_rule(fmt::format("IC trial {}", o.suffix), o, node, edge);
}

RewriteRule lt_trial(const Orientation& o) {
  auto joint = fmt::format(
      "joint_replace(node(w).property(\"jointInfluence\"), edge(v,w).property(\"{}\"), "
      "edge(v,w).property(\"{}\"))",
      o.applied_attr, o.p_attr);
  Sets node{{"visited", "true"},
            {"jointInfluence", joint},
            {"sigma", fmt::format("threshold_ratio({}, node(w).property(\"theta\"))", joint)}};
  Sets edge{{"marked", "true"}, {o.applied_attr, fmt::format("edge(v,w).property(\"{}\")", o.p_attr)}};
  return trial_rule(fmt::format("LT trial {}", o.suffix), o, node, edge);
}

}  // namespace

RuleLibrary build_ic_rules() {
  RuleLibrary lib;
  lib.add(ic_trial(kD2S));
  lib.add(ic_trial(kS2D));
  lib.add(activate_rule("IC activate"));
  return lib;
}

RuleLibrary build_lt_rules() {
  RuleLibrary lib;
  lib.add(lt_trial(kS2D));
  lib.add(lt_trial(kD2S));
  lib.add(activate_rule("LT activate"));
  return lib;
}

RuleLibrary build_rules(Model model) { return model == Model::ic ? build_ic_rules() : build_lt_rules(); }

const std::string& ic_strategy_text() {
  static const std::string text =
      "repeat(IC trial d2s);\n"
      "repeat(IC trial s2d);\n"
      "setPos(Property(CrtGraph,Node,sigma>=\"1\"));\n"
      "repeat(IC activate)\n";
  return text;
}

const std::string& lt_strategy_text() {
  static const std::string text =
      "repeat(LT trial s2d);\n"
      "repeat(LT trial d2s);\n"
      "setPos(Property(CrtGraph,Node,sigma>=\"1\"));\n"
      "repeat(LT activate)\n";
  return text;
}

StrategyProgram model_strategy(Model model, bool strict_sigma) {
  auto program = parse_strategy(model == Model::ic ? ic_strategy_text() : lt_strategy_text());
  if (strict_sigma) {
    for (auto& ins : program.instructions) {
      if (ins.op == Instruction::Op::set_pos && ins.filter.predicate.attribute == "sigma") {
        ins.filter.predicate.cmp = Comparator::gt;
      }
    }
  }
  return program;
}

// --- distributions and config ------------------------------------------------

namespace {

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Error config_error(const std::string& msg) { return Error(ErrorCode::config_error, msg); }

void check_unit(double x, std::string_view what) {
  if (!(x >= 0.0 && x <= 1.0)) throw config_error(fmt::format("{} {} is outside [0, 1]", what, x));
}

}  // namespace

Distribution Distribution::parse(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    // A bare number is a constant.
    if (auto x = parse_double(spec)) return Distribution{Kind::constant, *x, *x, {}};
    throw config_error(fmt::format("bad distribution '{}' (expected const:x, uniform:lo,hi or file:path)", spec));
  }
  auto kind = spec.substr(0, colon);
  auto rest = spec.substr(colon + 1);
  Distribution d;
  if (kind == "const") {
    auto x = parse_double(rest);
    if (!x) throw config_error(fmt::format("bad constant '{}'", rest));
    d.kind = Kind::constant;
    d.lo = d.hi = *x;
  } else if (kind == "uniform") {
    auto comma = rest.find(',');
    if (comma == std::string_view::npos) throw config_error(fmt::format("uniform needs lo,hi: '{}'", spec));
    auto lo = parse_double(rest.substr(0, comma));
    auto hi = parse_double(rest.substr(comma + 1));
    if (!lo || !hi || *lo > *hi) throw config_error(fmt::format("bad uniform range '{}'", rest));
    d.kind = Kind::uniform;
    d.lo = *lo;
    d.hi = *hi;
  } else if (kind == "file") {
    if (rest.empty()) throw config_error("file distribution needs a path");
    d.kind = Kind::file;
    d.path = std::string(rest);
    return d;
  } else {
    throw config_error(fmt::format("unknown distribution '{}'", kind));
  }
  check_unit(d.lo, "distribution bound");
  check_unit(d.hi, "distribution bound");
  return d;
}

std::string Distribution::to_string() const {
  switch (kind) {
    case Kind::constant: return fmt::format("const:{}", lo);
    case Kind::uniform: return fmt::format("uniform:{},{}", lo, hi);
    case Kind::file: return "file:" + path;
  }
  return {};
}

double Distribution::draw(RandomSource& rng) const {
  switch (kind) {
    case Kind::constant: return lo;
    case Kind::uniform: return rng.uniform(lo, hi);
    case Kind::file: break;
  }
  throw config_error("file distributions have no per-element draw");
}

ModelConfig model_config_from_json(const ojson& doc) {
  ModelConfig c;
  try {
    if (doc.contains("model")) {
      const auto& m = doc["model"];
      if (m.contains("type")) {
        auto model = model_from_string(m["type"].get<std::string>());
        if (!model) throw config_error(fmt::format("unknown model '{}'", m["type"].get<std::string>()));
        c.model = *model;
      }
      for (const auto& s : m.value("seeds", ojson::array())) {
        c.seeds.push_back(s.is_string() ? s.get<std::string>() : std::to_string(s.get<std::uint64_t>()));
      }
      c.max_rounds = m.value("max_rounds", c.max_rounds);
      c.strict_sigma = m.value("strict_sigma", c.strict_sigma);
      auto mode = m.value("mode", std::string("random"));
      if (mode == "random") c.mode = MatchMode::random;
      else if (mode == "deterministic") c.mode = MatchMode::deterministic;
      else throw config_error(fmt::format("unknown match mode '{}'", mode));
    }
    if (doc.contains("init")) {
      const auto& i = doc["init"];
      auto spec = [](const ojson& v) { return v.is_number() ? fmt::format("{}", v.get<double>()) : v.get<std::string>(); };
      if (i.contains("p")) c.probability = Distribution::parse(spec(i["p"]));
      if (i.contains("theta")) c.theta = Distribution::parse(spec(i["theta"]));
    }
    if (doc.contains("rng")) c.rng_seed = doc["rng"].value("seed", c.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(fmt::format("malformed model config: {}", e.what()));
  }
  return c;
}

ojson model_config_to_json(const ModelConfig& c) {
  ojson doc;
  doc["model"] = {{"type", to_string(c.model)},
                  {"seeds", c.seeds},
                  {"max_rounds", c.max_rounds},
                  {"strict_sigma", c.strict_sigma},
                  {"mode", c.mode == MatchMode::random ? "random" : "deterministic"}};
  ojson init = ojson::object();
  if (c.probability) init["p"] = c.probability->to_string();
  if (c.theta) init["theta"] = c.theta->to_string();
  doc["init"] = std::move(init);
  doc["rng"] = {{"seed", c.rng_seed}};
  return doc;
}

ModelConfig load_model_config(const std::string& path) { return model_config_from_json(parse_json_text(read_file(path))); }

// --- setup -------------------------------------------------------------------

std::optional<ElementId> find_node(const PortGraph& graph, std::string_view name_or_id) {
  for (const auto& slot : graph.slots()) {
    if (!slot || slot->kind != ElementKind::node) continue;
    const auto* name = slot->record.find("name");
    if (name && name->kind() == ValueKind::text && name->as_text() == name_or_id) return slot->id;
  }
  std::uint64_t raw_id = 0;
  auto [ptr, ec] = std::from_chars(name_or_id.data(), name_or_id.data() + name_or_id.size(), raw_id);
  if (ec == std::errc() && ptr == name_or_id.data() + name_or_id.size()) {
    const auto* e = graph.find(ElementId{raw_id});
    if (e && e->kind == ElementKind::node) return e->id;
  }
  return std::nullopt;
}

std::optional<NodeEdge> edge_between_nodes(const PortGraph& graph, ElementId u, ElementId v) {
  for (auto port : graph.element(u).incident) {
    for (auto e : graph.element(port).incident) {
      const auto& edge = graph.element(e);
      auto far = edge.other_end(port);
      if (graph.element(far).owner != v) continue;
      auto name = graph.property(port, "name");
      bool in = name && name->kind() == ValueKind::text && name->as_text() == "In";
      return NodeEdge{e, in};
    }
  }
  return std::nullopt;
}

namespace {

std::map<std::string, ElementId, std::less<>> node_names(const PortGraph& graph) {
  std::map<std::string, ElementId, std::less<>> out;
  for (const auto& slot : graph.slots()) {
    if (!slot || slot->kind != ElementKind::node) continue;
    const auto* name = slot->record.find("name");
    if (name && name->kind() == ValueKind::text) out.emplace(name->as_text(), slot->id);
  }
  return out;
}

std::vector<std::vector<std::string>> read_table(const std::string& path, std::size_t min_cols) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream ls(line);
    std::vector<std::string> cols;
    for (std::string tok; ls >> tok;) cols.push_back(tok);
    if (cols.empty() || cols[0].starts_with('#')) continue;
    if (cols.size() < min_cols) {
      throw ParseError(fmt::format("{}: expected at least {} columns", path, min_cols), n, 1, 0);
    }
    rows.push_back(std::move(cols));
  }
  return rows;
}

double unit_cell(const std::string& text, const std::string& path) {
  auto x = parse_double(text);
  if (!x) throw config_error(fmt::format("{}: bad number '{}'", path, text));
  check_unit(*x, "value");
  return *x;
}

ElementId named(const std::map<std::string, ElementId, std::less<>>& names, const PortGraph& g,
                const std::string& key) {
  if (auto it = names.find(key); it != names.end()) return it->second;
  if (auto id = find_node(g, key)) return *id;
  throw config_error(fmt::format("unknown node '{}'", key));
}

/// Per-edge probabilities from `u v p_uv p_vu` rows: {edge -> (p_i2o, p_o2i)}.
std::map<ElementId, std::pair<double, double>> edge_probabilities(const PortGraph& g, const std::string& path) {
  auto names = node_names(g);
  std::map<ElementId, std::pair<double, double>> out;
  for (const auto& row : read_table(path, 4)) {
    auto u = named(names, g, row[0]);
    auto v = named(names, g, row[1]);
    auto link = edge_between_nodes(g, u, v);
    if (!link) throw config_error(fmt::format("{}: no edge between {} and {}", path, row[0], row[1]));
    double p_uv = unit_cell(row[2], path);
    double p_vu = unit_cell(row[3], path);
    out[link->edge] = link->u_is_in ? std::pair{p_uv, p_vu} : std::pair{p_vu, p_uv};
  }
  return out;
}

}  // namespace

LocatedGraph setup_simulation(const PortGraph& graph, const ModelConfig& config, RandomSource& rng) {
  if (config.seeds.empty()) throw config_error("at least one seed is required");
  std::vector<ElementId> seeds;
  for (const auto& s : config.seeds) {
    auto id = find_node(graph, s);
    if (!id) throw config_error(fmt::format("seed '{}' is not a node of the graph", s));
    seeds.push_back(*id);
  }
  std::sort(seeds.begin(), seeds.end());
  bool lt = config.model == Model::lt;

  PortGraph g = graph;
  auto edges = g.edges();
  auto nodes = g.nodes();

  // Edge probabilities first.
  std::map<ElementId, std::pair<double, double>> from_file;
  if (config.probability && config.probability->kind == Distribution::Kind::file) {
    from_file = edge_probabilities(g, config.probability->path);
  }
  for (auto e : edges) {
    g.set_property(e, "marked", false);
    if (config.probability) {
      double i2o = 0, o2i = 0;
      if (config.probability->kind == Distribution::Kind::file) {
        auto it = from_file.find(e);
        if (it == from_file.end()) {
          throw config_error(fmt::format("{}: no probabilities for edge #{}", config.probability->path, raw(e)));
        }
        std::tie(i2o, o2i) = it->second;
      } else {
        i2o = config.probability->draw(rng);
        o2i = config.probability->draw(rng);
      }
      g.set_property(e, "p_i2o", i2o);
      g.set_property(e, "p_o2i", o2i);
    } else {
      for (const char* attr : {"p_i2o", "p_o2i"}) {
        auto p = g.property(e, attr);
        if (!p || !p->is_numeric()) {
          throw config_error(fmt::format("edge #{} has no {} and no probability distribution was given", raw(e), attr));
        }
        check_unit(p->as_real(), attr);
        g.set_property(e, attr, p->as_real());
      }
    }
    if (lt) {
      g.set_property(e, "applied_i2o", 0.0);
      g.set_property(e, "applied_o2i", 0.0);
    }
  }

  std::map<ElementId, double> theta_file;
  if (lt && config.theta && config.theta->kind == Distribution::Kind::file) {
    auto names = node_names(g);
    for (const auto& row : read_table(config.theta->path, 2)) {
      theta_file[named(names, g, row[0])] = unit_cell(row[1], config.theta->path);
    }
  }
  for (auto n : nodes) {
    g.set_property(n, "active", std::binary_search(seeds.begin(), seeds.end(), n));
    g.set_property(n, "visited", false);
    g.set_property(n, "sigma", 0.0);
    if (!lt) continue;
    g.set_property(n, "jointInfluence", 0.0);
    double theta = 0;
    if (!config.theta) {
      auto t = g.property(n, "theta");
      if (!t || !t->is_numeric()) throw config_error("theta required for LT");
      theta = t->as_real();
    } else if (config.theta->kind == Distribution::Kind::file) {
      auto it = theta_file.find(n);
      if (it == theta_file.end()) throw config_error(fmt::format("{}: no theta for node #{}", config.theta->path, raw(n)));
      theta = it->second;
    } else {
      theta = config.theta->draw(rng);
    }
    check_unit(theta, "theta");
    g.set_property(n, "theta", theta);
  }
  return LocatedGraph::whole(std::move(g));
}

RoundHook probability_reload_hook(std::string path) {
  return [path = std::move(path)](std::size_t round, const LocatedGraph& current) -> std::optional<LocatedGraph> {
    if (round == 1) return std::nullopt;
    auto probabilities = edge_probabilities(current.graph, path);
    LocatedGraph next = current;
    for (const auto& [edge, p] : probabilities) {
      const std::pair<const char*, double> dirs[] = {{"i2o", p.first}, {"o2i", p.second}};
      bool reopen = false;
      for (const auto& [dir, value] : dirs) {
        auto attr = fmt::format("p_{}", dir);
        auto old = next.graph.property(edge, attr);
        if (old && old->is_numeric() && old->as_real() == value) continue;
        next.graph.set_property(edge, attr, value);
        auto applied = next.graph.property(edge, fmt::format("applied_{}", dir));
        if (applied && applied->is_numeric() && applied->as_real() != 0.0) reopen = true;
      }
      if (reopen) next.graph.set_property(edge, "marked", false);
    }
    return next;
  };
}

}  // namespace porgysim
