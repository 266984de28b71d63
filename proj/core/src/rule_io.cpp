#include "porgysim/rule_io.hpp"

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

namespace {

void put_structure(ojson& j, const RuleElement& e) {
  j["id"] = raw(e.id);
  if (!e.name.empty()) j["name"] = e.name;
  if (e.kind == ElementKind::port) j["owner"] = raw(e.owner);
  if (e.kind == ElementKind::edge) j["ends"] = {raw(e.ends[0]), raw(e.ends[1])};
}

template <class Elements, class Fill>
ojson side_to_json(const Elements& side, Fill fill) {
  ojson out{{"nodes", ojson::array()}, {"ports", ojson::array()}, {"edges", ojson::array()}};
  for (const auto& e : side) {
    ojson j;
    put_structure(j, e);
    fill(j, e);
    const char* key = e.kind == ElementKind::node ? "nodes" : e.kind == ElementKind::port ? "ports" : "edges";
    out[key].push_back(std::move(j));
  }
  return out;
}

void read_structure(const ojson& j, ElementKind kind, RuleElement& e) {
  e.kind = kind;
  e.id = ElementId{j.at("id").get<std::uint64_t>()};
  e.name = j.value("name", std::string());
  if (kind == ElementKind::port) e.owner = ElementId{j.at("owner").get<std::uint64_t>()};
  if (kind == ElementKind::edge) {
    const auto& ends = j.at("ends");
    if (!ends.is_array() || ends.size() != 2) throw Error(ErrorCode::invalid_rule, "edge ends must be a pair");
    e.ends = {ElementId{ends[0].get<std::uint64_t>()}, ElementId{ends[1].get<std::uint64_t>()}};
  }
}

template <class T, class Fill>
std::vector<T> side_from_json(const ojson& side, Fill fill) {
  std::vector<T> out;
  const std::pair<const char*, ElementKind> keys[] = {
      {"nodes", ElementKind::node}, {"ports", ElementKind::port}, {"edges", ElementKind::edge}};
  for (const auto& [key, kind] : keys) {
    if (!side.contains(key)) continue;
    for (const auto& j : side[key]) {
      T e;
      read_structure(j, kind, e);
      fill(j, e);
      out.push_back(std::move(e));
    }
  }
  return out;
}

ojson ids_json(const std::vector<ElementId>& ids) {
  auto a = ojson::array();
  for (auto id : ids) a.push_back(raw(id));
  return a;
}

std::vector<ElementId> ids_from(const ojson& j) {
  std::vector<ElementId> out;
  for (const auto& v : j) out.push_back(ElementId{v.get<std::uint64_t>()});
  return out;
}

}  // namespace

ojson rule_to_json(const RewriteRule& rule) {
  ojson doc;
  doc["name"] = rule.name();
  doc["lhs"] = side_to_json(rule.lhs(), [](ojson& j, const PatternElement& e) {
    auto preds = ojson::array();
    for (const auto& p : e.predicates) {
      ojson pj{{"attr", p.attribute}, {"cmp", to_string(p.cmp)}};
      if (const auto* v = std::get_if<Value>(&p.operand)) pj["operand"] = value_to_json(*v);
      if (const auto* var = std::get_if<Variable>(&p.operand)) pj["operand"] = {{"var", var->name}};
      preds.push_back(std::move(pj));
    }
    j["predicates"] = std::move(preds);
  });
  doc["rhs"] = side_to_json(rule.rhs(), [](ojson& j, const TemplateElement& e) {
    ojson props = ojson::object();
    for (const auto& a : e.assignments) props[a.attribute] = a.expression.source();
    j["properties"] = std::move(props);
  });
  ojson arrow{{"ports", ojson::array()}, {"edges", ojson::array()}};
  for (const auto& p : rule.arrow_ports()) arrow["ports"].push_back({{"id", raw(p.id)}, {"type", p.type}});
  for (const auto& e : rule.arrow_edges()) {
    arrow["edges"].push_back({{"port", raw(e.arrow_port)}, {"target", raw(e.target)}});
  }
  doc["arrow"] = std::move(arrow);
  if (rule.position_update()) doc["J"] = ids_json(*rule.position_update());
  if (rule.ban_update()) doc["K"] = ids_json(*rule.ban_update());
  return doc;
}

RewriteRule rule_from_json(const ojson& doc) {
  try {
    auto lhs = side_from_json<PatternElement>(doc.at("lhs"), [](const ojson& j, PatternElement& e) {
      for (const auto& pj : j.value("predicates", ojson::array())) {
        PropertyPredicate p;
        p.attribute = pj.at("attr").get<std::string>();
        auto cmp = comparator_from_string(pj.at("cmp").get<std::string>());
        if (!cmp) throw Error(ErrorCode::invalid_rule, fmt::format("unknown comparator '{}'", pj["cmp"].dump()));
        p.cmp = *cmp;
        if (pj.contains("operand")) {
          const auto& op = pj["operand"];
          if (op.contains("var")) {
            p.operand = Variable{op["var"].get<std::string>()};
          } else {
            p.operand = value_from_json(op);
          }
        }
        e.predicates.push_back(std::move(p));
      }
    });
    auto rhs = side_from_json<TemplateElement>(doc.at("rhs"), [](const ojson& j, TemplateElement& e) {
      const auto props = j.value("properties", ojson::object());
      for (const auto& [attr, expr] : props.items()) {
        if (!expr.is_string()) {
          throw Error(ErrorCode::invalid_rule, fmt::format("rhs property '{}' must be an expression string", attr));
        }
        e.assignments.push_back(Assignment{attr, Expression::parse(expr.get<std::string>())});
      }
    });
    std::vector<ArrowPort> ports;
    std::vector<ArrowEdge> edges;
    const auto& arrow = doc.at("arrow");
    for (const auto& p : arrow.value("ports", ojson::array())) {
      ports.push_back(ArrowPort{ElementId{p.at("id").get<std::uint64_t>()}, p.value("type", std::string("bridge"))});
    }
    for (const auto& e : arrow.value("edges", ojson::array())) {
      edges.push_back(ArrowEdge{ElementId{e.at("port").get<std::uint64_t>()},
                                ElementId{e.at("target").get<std::uint64_t>()}});
    }
    std::optional<std::vector<ElementId>> j, k;
    if (doc.contains("J")) j = ids_from(doc["J"]);
    if (doc.contains("K")) k = ids_from(doc["K"]);
    return RewriteRule(doc.value("name", std::string()), std::move(lhs), std::move(rhs), std::move(ports),
                       std::move(edges), std::move(j), std::move(k));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_rule, fmt::format("malformed rule document: {}", e.what()));
  }
}

std::string serialize_rule(const RewriteRule& rule) { return rule_to_json(rule).dump(2) + "\n"; }

RewriteRule deserialize_rule(std::string_view bytes) { return rule_from_json(parse_json_text(bytes)); }

}  // namespace porgysim
