#include "porgysim/rule.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

const char* to_string(Comparator cmp) noexcept {
  switch (cmp) {
    case Comparator::eq: return "=";
    case Comparator::ne: return "!=";
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::exists: return "exists";
  }
  return "?";
}

std::optional<Comparator> comparator_from_string(std::string_view text) noexcept {
  if (text == "=" || text == "==") return Comparator::eq;
  if (text == "!=" || text == "<>") return Comparator::ne;
  if (text == "<") return Comparator::lt;
  if (text == "<=") return Comparator::le;
  if (text == ">") return Comparator::gt;
  if (text == ">=") return Comparator::ge;
  if (text == "exists") return Comparator::exists;
  return std::nullopt;
}

void PropertyPredicate::check() const {
  if (attribute.empty()) throw Error(ErrorCode::invalid_rule, "predicate without attribute");
  if (cmp == Comparator::exists) {
    if (!std::holds_alternative<std::monostate>(operand)) {
      throw Error(ErrorCode::invalid_rule, fmt::format("'{}': exists takes no operand", attribute));
    }
    return;
  }
  if (std::holds_alternative<std::monostate>(operand)) {
    throw Error(ErrorCode::invalid_rule, fmt::format("'{}': comparator needs an operand", attribute));
  }
  if (std::holds_alternative<Variable>(operand)) {
    if (cmp != Comparator::eq) {
      throw Error(ErrorCode::invalid_rule,
                  fmt::format("'{}': pattern variables only support '='", attribute));
    }
    return;
  }
  const auto& v = std::get<Value>(operand);
  bool ordered = cmp == Comparator::lt || cmp == Comparator::le || cmp == Comparator::gt ||
                 cmp == Comparator::ge;
  if (ordered && !v.is_numeric()) {
    throw Error(ErrorCode::invalid_rule,
                fmt::format("'{}': comparator {} needs a numeric operand, got {}", attribute,
                            porgysim::to_string(cmp), porgysim::to_string(v.kind())));
  }
}

bool PropertyPredicate::holds(const Value& actual, const Value& expected, double epsilon) const {
  if (cmp == Comparator::exists) return true;
  if (actual.is_numeric() && expected.is_numeric()) {
    double x = actual.as_real();
    double t = expected.as_real();
    switch (cmp) {
      case Comparator::eq: return std::fabs(x - t) <= epsilon;
      case Comparator::ne: return std::fabs(x - t) > epsilon;
      case Comparator::lt: return x < t - epsilon;
      case Comparator::le: return x <= t + epsilon;
      case Comparator::gt: return x > t + epsilon;
      case Comparator::ge: return x >= t - epsilon;
      case Comparator::exists: return true;
    }
  }
  if (actual.kind() != expected.kind()) return false;
  switch (cmp) {
    case Comparator::eq: return actual == expected;
    case Comparator::ne: return !(actual == expected);
    default: return false;
  }
}

std::string PropertyPredicate::to_string() const {
  if (cmp == Comparator::exists) return attribute;
  std::string rhs;
  if (const auto* v = std::get_if<Value>(&operand)) {
    rhs = v->to_display();
  } else if (const auto* var = std::get_if<Variable>(&operand)) {
    rhs = var->name;
  }
  return fmt::format("{}{}{}", attribute, porgysim::to_string(cmp), rhs);
}

bool satisfies(const Record& record, const std::vector<PropertyPredicate>& predicates,
               Bindings& bindings, double epsilon) {
  for (const auto& pred : predicates) {
    const Value* actual = record.find(pred.attribute);
    if (!actual) return false;
    if (const auto* expected = std::get_if<Value>(&pred.operand)) {
      if (!pred.holds(*actual, *expected, epsilon)) return false;
    } else if (const auto* var = std::get_if<Variable>(&pred.operand)) {
      auto it = bindings.find(var->name);
      if (it == bindings.end()) {
        bindings.emplace(var->name, *actual);
      } else if (!pred.holds(*actual, it->second, epsilon)) {
        return false;
      }
    }
  }
  return true;
}

// --- RewriteRule -------------------------------------------------------------

RewriteRule::RewriteRule(std::string name, std::vector<PatternElement> lhs,
                         std::vector<TemplateElement> rhs, std::vector<ArrowPort> arrow_ports,
                         std::vector<ArrowEdge> arrow_edges,
                         std::optional<std::vector<ElementId>> position_update,
                         std::optional<std::vector<ElementId>> ban_update)
    : name_(std::move(name)),
      lhs_(std::move(lhs)),
      rhs_(std::move(rhs)),
      arrow_ports_(std::move(arrow_ports)),
      arrow_edges_(std::move(arrow_edges)),
      j_(std::move(position_update)),
      k_(std::move(ban_update)) {
  validate_and_derive();
}

std::size_t RewriteRule::lhs_index(ElementId id) const noexcept {
  for (std::size_t i = 0; i < lhs_.size(); ++i) {
    if (lhs_[i].id == id) return i;
  }
  return npos;
}

std::size_t RewriteRule::rhs_index(ElementId id) const noexcept {
  for (std::size_t i = 0; i < rhs_.size(); ++i) {
    if (rhs_[i].id == id) return i;
  }
  return npos;
}

std::size_t RewriteRule::lhs_index_by_name(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < lhs_.size(); ++i) {
    if (!lhs_[i].name.empty() && lhs_[i].name == name) return i;
  }
  return npos;
}

std::size_t RewriteRule::rhs_index_by_name(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < rhs_.size(); ++i) {
    if (!rhs_[i].name.empty() && rhs_[i].name == name) return i;
  }
  return npos;
}

std::size_t RewriteRule::resolve(const ElementRef& ref) const {
  if (auto it = resolved_.find(ref.to_string()); it != resolved_.end()) return it->second;

  auto by_name = [&](std::string_view name, std::optional<ElementKind> kind) -> std::size_t {
    auto i = lhs_index_by_name(name);
    if (i != npos) return (!kind || lhs_[i].kind == *kind) ? i : npos;
    auto r = rhs_index_by_name(name);
    if (r == npos || (kind && rhs_[r].kind != *kind)) return npos;
    return survivor_of_[r];
  };

  switch (ref.form) {
    case ElementRef::Form::named: return by_name(ref.first, std::nullopt);
    case ElementRef::Form::node: return by_name(ref.first, ElementKind::node);
    case ElementRef::Form::port: return by_name(ref.first, ElementKind::port);
    case ElementRef::Form::edge: {
      if (ref.second.empty()) return by_name(ref.first, ElementKind::edge);
      auto a = by_name(ref.first, ElementKind::node);
      auto b = by_name(ref.second, ElementKind::node);
      if (a == npos || b == npos) return npos;
      std::size_t found = npos;
      for (std::size_t i = 0; i < lhs_.size(); ++i) {
        if (lhs_[i].kind != ElementKind::edge) continue;
        auto o0 = lhs_[lhs_index(lhs_[i].ends[0])].owner;
        auto o1 = lhs_[lhs_index(lhs_[i].ends[1])].owner;
        if ((o0 == lhs_[a].id && o1 == lhs_[b].id) || (o0 == lhs_[b].id && o1 == lhs_[a].id)) {
          if (found != npos) return npos;  // ambiguous
          found = i;
        }
      }
      return found;
    }
  }
  return npos;
}

namespace {

template <class Elements>
void check_side(const Elements& side, const char* label, const std::string& rule) {
  std::set<std::string_view> names;
  auto index_of = [&](ElementId id) -> const RuleElement* {
    for (const auto& e : side) {
      if (e.id == id) return &e;
    }
    return nullptr;
  };
  std::set<std::pair<ElementId, ElementId>> pairs;
  for (const auto& e : side) {
    if (!e.name.empty() && !names.insert(e.name).second) {
      throw Error(ErrorCode::invalid_rule, fmt::format("{}: duplicate {} name '{}'", rule, label, e.name));
    }
    if (e.kind == ElementKind::port) {
      const auto* o = index_of(e.owner);
      if (!o || o->kind != ElementKind::node) {
        throw Error(ErrorCode::invalid_rule,
                    fmt::format("{}: {} port #{} has no owner node", rule, label, raw(e.id)));
      }
    } else if (e.kind == ElementKind::edge) {
      for (auto end : e.ends) {
        const auto* p = index_of(end);
        if (!p || p->kind != ElementKind::port) {
          throw Error(ErrorCode::invalid_rule,
                      fmt::format("{}: {} edge #{} has a dangling end", rule, label, raw(e.id)));
        }
      }
      auto key = std::minmax(e.ends[0], e.ends[1]);
      if (!pairs.insert({key.first, key.second}).second) {
        throw Error(ErrorCode::invalid_rule,
                    fmt::format("{}: {} has two edges between the same ports", rule, label));
      }
    }
  }
}

}  // namespace

void RewriteRule::validate_and_derive() {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::invalid_rule, fmt::format("rule '{}': {}", name_, what));
  };

  std::set<ElementId> ids;
  for (const auto& e : lhs_) {
    if (!ids.insert(e.id).second) fail(fmt::format("duplicate id #{}", raw(e.id)));
    for (const auto& p : e.predicates) p.check();
  }
  for (const auto& e : rhs_) {
    if (!ids.insert(e.id).second) fail(fmt::format("duplicate id #{}", raw(e.id)));
  }
  for (const auto& a : arrow_ports_) {
    if (!ids.insert(a.id).second) fail(fmt::format("duplicate id #{}", raw(a.id)));
    if (a.type != "bridge") {
      throw Error(ErrorCode::unsupported,
                  fmt::format("rule '{}': arrow port type '{}' is not supported (only 'bridge')",
                              name_, a.type));
    }
  }
  check_side(lhs_, "lhs", name_);
  check_side(rhs_, "rhs", name_);

  // Bridges: arrow port -> (lhs ports, rhs ports).
  bridges_.assign(lhs_.size(), {});
  std::vector<std::size_t> bridged_from(rhs_.size(), npos);
  for (const auto& arrow : arrow_ports_) {
    std::vector<std::size_t> ls, rs;
    for (const auto& edge : arrow_edges_) {
      if (edge.arrow_port != arrow.id) continue;
      auto l = lhs_index(edge.target);
      auto r = rhs_index(edge.target);
      if (l != npos && lhs_[l].kind == ElementKind::port) {
        ls.push_back(l);
      } else if (r != npos && rhs_[r].kind == ElementKind::port) {
        rs.push_back(r);
      } else {
        fail(fmt::format("arrow edge from #{} must reach an lhs or rhs port", raw(arrow.id)));
      }
    }
    if (ls.empty() || rs.empty()) {
      fail(fmt::format("bridge port #{} must join at least one lhs and one rhs port", raw(arrow.id)));
    }
    if (ls.size() > 1) {
      throw Error(ErrorCode::unsupported,
                  fmt::format("rule '{}': bridge #{} merges several lhs ports", name_, raw(arrow.id)));
    }
    for (auto r : rs) {
      if (bridged_from[r] != npos && bridged_from[r] != ls[0]) {
        throw Error(ErrorCode::unsupported,
                    fmt::format("rule '{}': rhs port #{} is bridged from several lhs ports", name_,
                                raw(rhs_[r].id)));
      }
      bridged_from[r] = ls[0];
      auto& targets = bridges_[ls[0]];
      if (std::find(targets.begin(), targets.end(), r) == targets.end()) targets.push_back(r);
    }
  }
  for (const auto& edge : arrow_edges_) {
    bool known = std::any_of(arrow_ports_.begin(), arrow_ports_.end(),
                             [&](const ArrowPort& a) { return a.id == edge.arrow_port; });
    if (!known) fail(fmt::format("arrow edge references unknown arrow port #{}", raw(edge.arrow_port)));
  }
  for (auto& targets : bridges_) std::sort(targets.begin(), targets.end());

  // Identity survival: ports first (first target in rhs order keeps the id).
  survivor_of_.assign(rhs_.size(), npos);
  for (std::size_t l = 0; l < lhs_.size(); ++l) {
    if (!bridges_[l].empty()) survivor_of_[bridges_[l].front()] = l;
  }
  // Nodes: survive the lhs node owning their identity-surviving ports.
  std::vector<bool> node_taken(lhs_.size(), false);
  for (std::size_t r = 0; r < rhs_.size(); ++r) {
    if (rhs_[r].kind != ElementKind::node) continue;
    std::size_t origin = npos;
    for (std::size_t q = 0; q < rhs_.size(); ++q) {
      if (rhs_[q].kind != ElementKind::port || rhs_[q].owner != rhs_[r].id || survivor_of_[q] == npos) continue;
      auto lhs_owner = lhs_index(lhs_[survivor_of_[q]].owner);
      if (origin != npos && origin != lhs_owner) {
        throw Error(ErrorCode::unsupported,
                    fmt::format("rule '{}': rhs node #{} merges several lhs nodes", name_, raw(rhs_[r].id)));
      }
      origin = lhs_owner;
    }
    if (origin != npos) {
      if (node_taken[origin]) {
        throw Error(ErrorCode::unsupported,
                    fmt::format("rule '{}': lhs node #{} is split across rhs nodes", name_,
                                raw(lhs_[origin].id)));
      }
      node_taken[origin] = true;
      survivor_of_[r] = origin;
    }
  }
  // A surviving port must sit on the survivor of its original owner.
  for (std::size_t r = 0; r < rhs_.size(); ++r) {
    if (rhs_[r].kind != ElementKind::port || survivor_of_[r] == npos) continue;
    auto owner_r = rhs_index(rhs_[r].owner);
    auto owner_l = lhs_index(lhs_[survivor_of_[r]].owner);
    if (survivor_of_[owner_r] != owner_l) fail("bridged port moved to a different node");
  }
  // Edges: survive the lhs edge between the corresponding surviving ports.
  for (std::size_t r = 0; r < rhs_.size(); ++r) {
    if (rhs_[r].kind != ElementKind::edge) continue;
    auto a = survivor_of_[rhs_index(rhs_[r].ends[0])];
    auto b = survivor_of_[rhs_index(rhs_[r].ends[1])];
    if (a == npos || b == npos) continue;
    for (std::size_t l = 0; l < lhs_.size(); ++l) {
      if (lhs_[l].kind != ElementKind::edge) continue;
      auto la = lhs_index(lhs_[l].ends[0]);
      auto lb = lhs_index(lhs_[l].ends[1]);
      if ((la == a && lb == b) || (la == b && lb == a)) survivor_of_[r] = l;
    }
  }

  // Position/ban updates must name rhs elements and be disjoint.
  auto check_update = [&](const std::optional<std::vector<ElementId>>& ids_opt, const char* what) {
    if (!ids_opt) return;
    for (auto id : *ids_opt) {
      if (rhs_index(id) == npos) fail(fmt::format("{} references #{} which is not in the rhs", what, raw(id)));
    }
  };
  check_update(j_, "J");
  check_update(k_, "K");
  if (j_ && k_) {
    for (auto id : *j_) {
      if (std::find(k_->begin(), k_->end(), id) != k_->end()) fail("J and K must be disjoint");
    }
  } else if (!j_ && k_ && !k_->empty()) {
    fail("J defaults to the whole rhs and must be disjoint from K; give J explicitly");
  }

  // Expressions may only read elements bound by the lhs morphism.
  for (const auto& e : rhs_) {
    std::set<std::string_view> attrs;
    for (const auto& a : e.assignments) {
      if (!attrs.insert(a.attribute).second) {
        fail(fmt::format("rhs #{} assigns '{}' twice", raw(e.id), a.attribute));
      }
      for (const auto& ref : a.expression.references()) {
        auto idx = resolve(ref);
        if (idx == npos) {
          fail(fmt::format("expression '{}' references unbound element '{}'", a.expression.source(),
                           ref.to_string()));
        }
        resolved_.emplace(ref.to_string(), idx);
      }
    }
  }
}

}  // namespace porgysim
