#include "porgysim/rewrite.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

namespace {

constexpr std::size_t npos = RewriteRule::npos;

/// One step of the search plan over lhs elements.
struct PlanStep {
  enum class Kind { scan_node, port_of, edge_from } kind;
  std::size_t target;  // lhs index assigned by this step
  std::size_t via;     // edge_from: lhs index of the already-assigned end port
};

std::vector<PlanStep> make_plan(const RewriteRule& rule) {
  const auto& lhs = rule.lhs();
  std::vector<bool> done(lhs.size(), false);
  std::vector<PlanStep> plan;
  auto all_done = [&] { return std::all_of(done.begin(), done.end(), [](bool b) { return b; }); };

  while (!all_done()) {
    bool progressed = false;
    for (std::size_t i = 0; i < lhs.size() && !progressed; ++i) {
      if (done[i] || lhs[i].kind != ElementKind::edge) continue;
      for (auto end : lhs[i].ends) {
        auto q = rule.lhs_index(end);
        if (!done[q]) continue;
        plan.push_back({PlanStep::Kind::edge_from, i, q});
        done[i] = true;
        auto other = rule.lhs_index(lhs[i].ends[0] == end ? lhs[i].ends[1] : lhs[i].ends[0]);
        done[other] = true;
        done[rule.lhs_index(lhs[other].owner)] = true;
        progressed = true;
        break;
      }
    }
    for (std::size_t i = 0; i < lhs.size() && !progressed; ++i) {
      if (done[i] || lhs[i].kind != ElementKind::port) continue;
      if (!done[rule.lhs_index(lhs[i].owner)]) continue;
      plan.push_back({PlanStep::Kind::port_of, i, npos});
      done[i] = true;
      progressed = true;
    }
    for (std::size_t i = 0; i < lhs.size() && !progressed; ++i) {
      if (done[i] || lhs[i].kind != ElementKind::node) continue;
      plan.push_back({PlanStep::Kind::scan_node, i, npos});
      done[i] = true;
      progressed = true;
    }
  }
  return plan;
}

class Matcher {
 public:
  Matcher(const RewriteRule& rule, const LocatedGraph& located, const MatchOptions& options)
      : rule_(rule),
        lhs_(rule.lhs()),
        located_(located),
        graph_(located.graph),
        options_(options),
        plan_(make_plan(rule)),
        host_(lhs_.size(), kNoElement) {}

  std::vector<Match> run() {
    Bindings bindings;
    search(0, bindings);
    return std::move(found_);
  }

 private:
  bool used(ElementId id) const { return std::find(host_.begin(), host_.end(), id) != host_.end(); }

  bool accept(std::size_t lhs_index, const Element& candidate, Bindings& bindings) const {
    if (candidate.kind != lhs_[lhs_index].kind) return false;
    return satisfies(candidate.record, lhs_[lhs_index].predicates, bindings, options_.epsilon);
  }

  void search(std::size_t step, const Bindings& bindings) {
    if (step == plan_.size()) {
      emit(bindings);
      return;
    }
    const auto& s = plan_[step];
    switch (s.kind) {
      case PlanStep::Kind::scan_node:
        for (const auto& slot : graph_.slots()) {
          if (!slot || slot->kind != ElementKind::node || used(slot->id)) continue;
          try_assign({{s.target, slot.get()}}, step, bindings);
        }
        break;
      case PlanStep::Kind::port_of: {
        auto owner = host_[rule_.lhs_index(lhs_[s.target].owner)];
        for (auto p : graph_.element(owner).incident) {
          if (used(p)) continue;
          try_assign({{s.target, graph_.find(p)}}, step, bindings);
        }
        break;
      }
      case PlanStep::Kind::edge_from: {
        const auto& pattern = lhs_[s.target];
        auto from_port = host_[s.via];
        auto other_lhs = rule_.lhs_index(pattern.ends[0] == lhs_[s.via].id ? pattern.ends[1] : pattern.ends[0]);
        auto owner_lhs = rule_.lhs_index(lhs_[other_lhs].owner);
        for (auto e : graph_.element(from_port).incident) {
          if (used(e)) continue;
          const Element* edge = graph_.find(e);
          ElementId other_port = edge->other_end(from_port);
          const Element* port = graph_.find(other_port);
          std::vector<std::pair<std::size_t, const Element*>> assignment{{s.target, edge}};
          if (host_[other_lhs] != kNoElement) {
            if (host_[other_lhs] != other_port) continue;
          } else {
            if (used(other_port) || (other_lhs == s.via)) continue;
            assignment.emplace_back(other_lhs, port);
            if (host_[owner_lhs] != kNoElement) {
              if (host_[owner_lhs] != port->owner) continue;
            } else {
              if (used(port->owner)) continue;
              assignment.emplace_back(owner_lhs, graph_.find(port->owner));
            }
          }
          try_assign(assignment, step, bindings);
        }
        break;
      }
    }
  }

  void try_assign(const std::vector<std::pair<std::size_t, const Element*>>& assignment, std::size_t step,
                  const Bindings& bindings) {
    Bindings local = bindings;
    // Distinct host ids inside one assignment (injectivity).
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      for (std::size_t j = i + 1; j < assignment.size(); ++j) {
        if (assignment[i].second->id == assignment[j].second->id) return;
      }
    }
    for (const auto& [idx, elem] : assignment) {
      if (!accept(idx, *elem, local)) return;
    }
    for (const auto& [idx, elem] : assignment) host_[idx] = elem->id;
    search(step + 1, local);
    for (const auto& [idx, elem] : assignment) host_[idx] = kNoElement;
  }

  void emit(const Bindings& bindings) {
    Match m{host_, bindings};
    auto image = m.image();
    if (!located_.position.intersects(image)) return;
    if (located_.banned.intersects(image)) return;
    found_.push_back(std::move(m));
  }

  const RewriteRule& rule_;
  const std::vector<PatternElement>& lhs_;
  const LocatedGraph& located_;
  const PortGraph& graph_;
  MatchOptions options_;
  std::vector<PlanStep> plan_;
  std::vector<ElementId> host_;
  std::vector<Match> found_;
};

}  // namespace

std::vector<ElementId> Match::image() const {
  std::vector<ElementId> out = host;
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Match> find_matches(const RewriteRule& rule, const LocatedGraph& located, RandomSource& rng,
                                MatchMode mode, const MatchOptions& options) {
  if (rule.lhs().empty()) return {};
  auto matches = Matcher(rule, located, options).run();
  std::sort(matches.begin(), matches.end(),
            [](const Match& a, const Match& b) { return a.host < b.host; });
  if (mode == MatchMode::random) rng.shuffle(matches);
  return matches;
}

bool is_valid_match(const RewriteRule& rule, const Match& match, const LocatedGraph& located,
                    const MatchOptions& options) {
  const auto& lhs = rule.lhs();
  const auto& g = located.graph;
  if (match.host.size() != lhs.size()) return false;
  auto sorted = match.image();
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  Bindings bindings;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const auto* e = g.find(match.host[i]);
    if (!e || e->kind != lhs[i].kind) return false;
    if (!satisfies(e->record, lhs[i].predicates, bindings, options.epsilon)) return false;
    if (lhs[i].kind == ElementKind::port) {
      if (e->owner != match.host[rule.lhs_index(lhs[i].owner)]) return false;
    } else if (lhs[i].kind == ElementKind::edge) {
      auto a = match.host[rule.lhs_index(lhs[i].ends[0])];
      auto b = match.host[rule.lhs_index(lhs[i].ends[1])];
      bool forward = e->ends[0] == a && e->ends[1] == b;
      bool backward = e->ends[0] == b && e->ends[1] == a;
      if (!forward && !backward) return false;
    }
  }
  if (!(bindings == match.bindings)) return false;
  return located.position.intersects(sorted) && !located.banned.intersects(sorted);
}

std::optional<Value> MatchContext::property(const ElementRef& ref, std::string_view attribute) const {
  auto idx = rule_.resolve(ref);
  if (idx == npos || idx >= match_.host.size()) {
    throw Error(ErrorCode::expression_error, fmt::format("unbound reference '{}'", ref.to_string()));
  }
  return host_.property(match_.host[idx], attribute);
}

Rewritten apply_rule(const RewriteRule& rule, const Match& match, const LocatedGraph& located,
                     RandomSource& rng) {
  const auto& lhs = rule.lhs();
  const auto& rhs = rule.rhs();
  const auto& survivor = rule.survivor_of();
  if (match.host.size() != lhs.size()) {
    throw Error(ErrorCode::rewrite_error, fmt::format("match does not fit rule '{}'", rule.name()));
  }
  for (auto id : match.host) {
    if (!located.graph.contains(id)) {
      throw Error(ErrorCode::unknown_element, fmt::format("match references missing element #{}", raw(id)));
    }
  }

  // Simultaneous assignment: every read sees the pre-application graph.
  struct Pending {
    std::size_t rhs;
    const std::string* attribute;
    Value value;
  };
  std::vector<Pending> pending;
  {
    MatchContext ctx(rule, match, located.graph);
    for (std::size_t r = 0; r < rhs.size(); ++r) {
      for (const auto& a : rhs[r].assignments) {
        pending.push_back({r, &a.attribute, a.expression.evaluate(ctx, rng)});
      }
    }
  }

  PortGraph g = located.graph;
  std::vector<ElementId> inst(rhs.size(), kNoElement);
  std::vector<bool> lhs_survives(lhs.size(), false);
  for (std::size_t r = 0; r < rhs.size(); ++r) {
    if (survivor[r] != npos) {
      inst[r] = match.host[survivor[r]];
      lhs_survives[survivor[r]] = true;
    }
  }

  // Deletions: edges, then ports, then nodes (which take their remaining ports along).
  for (ElementKind kind : {ElementKind::edge, ElementKind::port, ElementKind::node}) {
    for (std::size_t l = 0; l < lhs.size(); ++l) {
      if (lhs[l].kind != kind || lhs_survives[l] || !g.contains(match.host[l])) continue;
      switch (kind) {
        case ElementKind::edge: g.remove_edge(match.host[l]); break;
        case ElementKind::port: g.remove_port(match.host[l]); break;
        case ElementKind::node: g.remove_node(match.host[l]); break;
      }
    }
  }

  // Creations.
  try {
    for (std::size_t r = 0; r < rhs.size(); ++r) {
      if (rhs[r].kind == ElementKind::node && inst[r] == kNoElement) inst[r] = g.add_node();
    }
    for (std::size_t r = 0; r < rhs.size(); ++r) {
      if (rhs[r].kind == ElementKind::port && inst[r] == kNoElement) {
        inst[r] = g.add_port(inst[rule.rhs_index(rhs[r].owner)]);
      }
    }
    for (std::size_t r = 0; r < rhs.size(); ++r) {
      if (rhs[r].kind == ElementKind::edge && inst[r] == kNoElement) {
        inst[r] = g.add_edge(inst[rule.rhs_index(rhs[r].ends[0])], inst[rule.rhs_index(rhs[r].ends[1])]);
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::rewrite_error, fmt::format("rule '{}': {}", rule.name(), e.what()));
  }

  // Bridge fan-out: external edges of a surviving port are duplicated onto
  // every additional rhs port the bridge designates.
  auto image = match.image();
  for (std::size_t l = 0; l < lhs.size(); ++l) {
    const auto& targets = rule.bridges()[l];
    if (targets.size() < 2) continue;
    auto port = match.host[l];
    auto external = g.element(port).incident;
    for (auto e : external) {
      if (std::binary_search(image.begin(), image.end(), e)) continue;
      const auto& edge = g.element(e);
      auto far = edge.other_end(port);
      auto record = edge.record;
      for (std::size_t t = 1; t < targets.size(); ++t) {
        if (g.edge_between(inst[targets[t]], far)) {
          throw Error(ErrorCode::rewrite_error,
                      fmt::format("rule '{}': bridge fan-out would duplicate an edge on port #{}",
                                  rule.name(), raw(far)));
        }
        g.add_edge(inst[targets[t]], far, record);
      }
    }
  }

  for (auto& p : pending) g.set_property(inst[p.rhs], *p.attribute, std::move(p.value));

  // Position: (Pos \ image) u J ; banned: Ban u K. Removed ids drop out.
  std::vector<ElementId> position;
  position.reserve(located.position.size() + rhs.size());
  for (auto id : located.position) {
    if (!std::binary_search(image.begin(), image.end(), id) && g.contains(id)) position.push_back(id);
  }
  if (const auto& j = rule.position_update()) {
    for (auto id : *j) position.push_back(inst[rule.rhs_index(id)]);
  } else {
    position.insert(position.end(), inst.begin(), inst.end());
  }
  std::vector<ElementId> banned;
  for (auto id : located.banned) {
    if (g.contains(id)) banned.push_back(id);
  }
  if (const auto& k = rule.ban_update()) {
    for (auto id : *k) banned.push_back(inst[rule.rhs_index(id)]);
  }

  Rewritten out;
  out.touched = changed_slots(located.graph, g);
  bool banned_changed = banned != located.banned.ids();
  out.state = LocatedGraph{std::move(g), ElementSet(std::move(position)),
                           banned_changed ? ElementSet(std::move(banned)) : located.banned};
  if (out.state.position == located.position) out.state.position = located.position;
  out.image = std::move(image);
  return out;
}

}  // namespace porgysim
