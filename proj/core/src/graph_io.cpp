#include "porgysim/graph_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

namespace {

[[noreturn]] void malformed(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::parse_error, fmt::format("{}: {}", where, what));
}

ElementId id_field(const ojson& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    malformed(where, fmt::format("'{}' must be a positive integer id", key));
  }
  return ElementId{it->get<std::uint64_t>()};
}

Record properties_of(const ojson& element, const std::string& where) {
  auto it = element.find("properties");
  if (it == element.end()) return {};
  try {
    return record_from_json(*it);
  } catch (const Error& e) {
    malformed(where, e.what());
  }
}

const ojson& array_field(const ojson& doc, const char* key) {
  static const ojson empty = ojson::array();
  auto it = doc.find(key);
  if (it == doc.end()) return empty;
  if (!it->is_array()) malformed(key, "must be an array");
  return *it;
}

std::vector<ElementId> id_list(const ojson& doc, const char* key) {
  std::vector<ElementId> ids;
  for (std::size_t i = 0; i < doc.at(key).size(); ++i) {
    const auto& v = doc.at(key)[i];
    if (!v.is_number_unsigned()) malformed(fmt::format("{}[{}]", key, i), "expected an element id");
    ids.push_back(ElementId{v.get<std::uint64_t>()});
  }
  return ids;
}

ojson id_array(const ElementSet& set) {
  auto out = ojson::array();
  for (auto id : set) out.push_back(raw(id));
  return out;
}

}  // namespace

ojson value_to_json(const Value& value) {
  ojson j;
  j["kind"] = to_string(value.kind());
  switch (value.kind()) {
    case ValueKind::boolean: j["v"] = value.as_bool(); break;
    case ValueKind::integer: j["v"] = value.as_int(); break;
    case ValueKind::real: j["v"] = value.as_real(); break;
    case ValueKind::text: j["v"] = value.as_text(); break;
    case ValueKind::ref: j["v"] = raw(value.as_ref()); break;
  }
  return j;
}

Value value_from_json(const ojson& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("v") || !j["kind"].is_string()) {
    throw Error(ErrorCode::parse_error, "value must be {\"kind\":...,\"v\":...}");
  }
  auto kind = value_kind_from_string(j["kind"].get<std::string>());
  if (!kind) throw Error(ErrorCode::parse_error, fmt::format("unknown value kind '{}'", j["kind"].get<std::string>()));
  const auto& v = j["v"];
  switch (*kind) {
    case ValueKind::boolean:
      if (!v.is_boolean()) break;
      return Value(v.get<bool>());
    case ValueKind::integer:
      if (!v.is_number_integer()) break;
      return Value(v.get<std::int64_t>());
    case ValueKind::real:
      if (!v.is_number()) break;
      return Value(v.get<double>());
    case ValueKind::text:
      if (!v.is_string()) break;
      return Value(v.get<std::string>());
    case ValueKind::ref:
      if (!v.is_number_unsigned()) break;
      return Value(ElementId{v.get<std::uint64_t>()});
  }
  throw Error(ErrorCode::kind_mismatch, fmt::format("value does not match its kind '{}'", to_string(*kind)));
}

ojson record_to_json(const Record& record) {
  auto j = ojson::object();
  for (const auto& [name, value] : record.entries()) j[name] = value_to_json(value);
  return j;
}

Record record_from_json(const ojson& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "properties must be an object");
  Record r;
  for (const auto& [name, value] : j.items()) r.insert(name, value_from_json(value));
  return r;
}

ojson element_to_json(const Element& e) {
  ojson j;
  j["id"] = raw(e.id);
  if (e.kind == ElementKind::port) j["owner"] = raw(e.owner);
  if (e.kind == ElementKind::edge) j["ends"] = {raw(e.ends[0]), raw(e.ends[1])};
  j["properties"] = record_to_json(e.record);
  return j;
}

ojson graph_to_json(const PortGraph& graph) {
  ojson doc;
  doc["nodes"] = ojson::array();
  doc["ports"] = ojson::array();
  doc["edges"] = ojson::array();
  for (const auto& slot : graph.slots()) {
    if (!slot) continue;
    switch (slot->kind) {
      case ElementKind::node: doc["nodes"].push_back(element_to_json(*slot)); break;
      case ElementKind::port: doc["ports"].push_back(element_to_json(*slot)); break;
      case ElementKind::edge: doc["edges"].push_back(element_to_json(*slot)); break;
    }
  }
  return doc;
}

ojson located_to_json(const LocatedGraph& located) {
  auto doc = graph_to_json(located.graph);
  doc["position"] = id_array(located.position);
  doc["banned"] = id_array(located.banned);
  return doc;
}

PortGraph graph_from_json(const ojson& doc) {
  if (!doc.is_object()) malformed("document", "top level must be an object");
  PortGraph g;
  const auto& nodes = array_field(doc, "nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto where = fmt::format("nodes[{}]", i);
    g.insert_node(id_field(nodes[i], "id", where), properties_of(nodes[i], where));
  }
  const auto& ports = array_field(doc, "ports");
  for (std::size_t i = 0; i < ports.size(); ++i) {
    auto where = fmt::format("ports[{}]", i);
    g.insert_port(id_field(ports[i], "id", where), id_field(ports[i], "owner", where),
                  properties_of(ports[i], where));
  }
  const auto& edges = array_field(doc, "edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    auto where = fmt::format("edges[{}]", i);
    const auto& e = edges[i];
    auto ends = e.find("ends");
    if (ends == e.end() || !ends->is_array() || ends->size() != 2 || !(*ends)[0].is_number_unsigned() ||
        !(*ends)[1].is_number_unsigned()) {
      malformed(where, "'ends' must be a pair of port ids");
    }
    g.insert_edge(id_field(e, "id", where), ElementId{(*ends)[0].get<std::uint64_t>()},
                  ElementId{(*ends)[1].get<std::uint64_t>()}, properties_of(e, where));
  }
  return g;
}

LocatedGraph located_from_json(const ojson& doc) {
  auto graph = graph_from_json(doc);
  auto located = LocatedGraph::whole(std::move(graph));
  if (doc.contains("position")) located = set_position(located, id_list(doc, "position"));
  if (doc.contains("banned")) located = set_ban(located, id_list(doc, "banned"));
  return located;
}

ojson parse_json_text(std::string_view bytes) {
  try {
    return ojson::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports the 1-based index of the offending byte.
    auto offset = e.byte == 0 ? 0 : e.byte - 1;
    auto [line, column] = line_column(bytes, offset);
    throw ParseError("malformed JSON", line, column, offset);
  }
}

std::string serialize_graph(const PortGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

std::string serialize_located(const LocatedGraph& located) {
  return located_to_json(located).dump(2) + "\n";
}

PortGraph deserialize_graph(std::string_view bytes) { return graph_from_json(parse_json_text(bytes)); }

LocatedGraph deserialize_located(std::string_view bytes) {
  return located_from_json(parse_json_text(bytes));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, fmt::format("cannot write '{}'", path));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

}  // namespace porgysim
