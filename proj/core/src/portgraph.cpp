#include "porgysim/portgraph.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "porgysim/error.hpp"

namespace porgysim {

namespace {

std::size_t kind_index(ElementKind kind) { return static_cast<std::size_t>(kind); }

void insert_sorted(std::vector<ElementId>& ids, ElementId id) {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it == ids.end() || *it != id) ids.insert(it, id);
}

void erase_sorted(std::vector<ElementId>& ids, ElementId id) {
  auto it = std::lower_bound(ids.begin(), ids.end(), id);
  if (it != ids.end() && *it == id) ids.erase(it);
}

[[noreturn]] void unknown(ElementId id) {
  throw Error(ErrorCode::unknown_element, fmt::format("unknown element #{}", raw(id)));
}

}  // namespace

// --- Signature ---------------------------------------------------------------

std::optional<ValueKind> Signature::kind_of(ElementKind element, std::string_view attribute) const {
  auto it = kinds_.find(std::pair<ElementKind, std::string>(element, std::string(attribute)));
  if (it == kinds_.end()) return std::nullopt;
  return it->second;
}

void Signature::declare(ElementKind element, const std::string& attribute, ValueKind kind) {
  kinds_.emplace(std::pair{element, attribute}, kind);
}

// --- PortGraph ---------------------------------------------------------------

PortGraph::PortGraph() : PortGraph(std::make_shared<IdSource>()) {}

PortGraph::PortGraph(std::shared_ptr<IdSource> ids)
    : slots_(1), ids_(std::move(ids)), signature_(std::make_shared<Signature>()) {}

PortGraph PortGraph::create(std::span<const NodeSpec> nodes, std::span<const PortSpec> ports,
                            std::span<const EdgeSpec> edges) {
  PortGraph g;
  std::vector<ElementId> node_ids;
  node_ids.reserve(nodes.size());
  for (const auto& n : nodes) node_ids.push_back(g.add_node(Record::from_entries(n.properties)));

  std::vector<ElementId> port_ids;
  port_ids.reserve(ports.size());
  for (std::size_t i = 0; i < ports.size(); ++i) {
    if (ports[i].owner >= node_ids.size()) {
      throw Error(ErrorCode::invalid_graph,
                  fmt::format("orphan port: port {} references missing node {}", i, ports[i].owner));
    }
    port_ids.push_back(
        g.add_port(node_ids[ports[i].owner], Record::from_entries(ports[i].properties)));
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e.from >= port_ids.size() || e.to >= port_ids.size()) {
      throw Error(ErrorCode::invalid_graph,
                  fmt::format("dangling edge endpoint: edge {} references a missing port", i));
    }
    g.add_edge(port_ids[e.from], port_ids[e.to], Record::from_entries(e.properties));
  }
  return g;
}

bool PortGraph::contains(ElementId id) const noexcept { return find(id) != nullptr; }

const Element* PortGraph::find(ElementId id) const noexcept {
  auto i = raw(id);
  if (i == 0 || i >= slots_.size()) return nullptr;
  return slots_[i].get();
}

const Element& PortGraph::element(ElementId id) const {
  if (const auto* e = find(id)) return *e;
  unknown(id);
}

ElementPtr PortGraph::shared(ElementId id) const noexcept {
  auto i = raw(id);
  if (i == 0 || i >= slots_.size()) return nullptr;
  return slots_[i];
}

Element& PortGraph::mutate(ElementId id) {
  auto i = raw(id);
  if (i == 0 || i >= slots_.size() || !slots_[i]) unknown(id);
  auto copy = std::make_shared<Element>(*slots_[i]);
  Element& ref = *copy;
  slots_[i] = std::move(copy);
  return ref;
}

void PortGraph::check_record(ElementKind kind, const Record& record) {
  for (const auto& [name, value] : record.entries()) {
    auto declared = signature_->kind_of(kind, name);
    if (!declared) {
      auto sig = std::make_shared<Signature>(*signature_);
      sig->declare(kind, name, value.kind());
      signature_ = std::move(sig);
    } else if (*declared != value.kind() &&
               !(*declared == ValueKind::real && value.kind() == ValueKind::integer)) {
      throw Error(ErrorCode::kind_mismatch,
                  fmt::format("attribute '{}' on {} is declared {}, got {}", name,
                              to_string(kind), to_string(*declared), to_string(value.kind())));
    }
  }
}

void PortGraph::place(Element element) {
  auto i = raw(element.id);
  if (i == 0) throw Error(ErrorCode::invalid_graph, "element id 0 is reserved");
  if (i < slots_.size() && slots_[i]) {
    throw Error(ErrorCode::invalid_graph, fmt::format("duplicate element id #{}", i));
  }
  check_record(element.kind, element.record);
  // Widen integers stored into real attributes.
  for (const auto& [name, value] : element.record.entries()) {
    if (value.kind() == ValueKind::integer &&
        signature_->kind_of(element.kind, name) == ValueKind::real) {
      element.record.set(name, Value(value.as_real()));
    }
  }
  if (i >= slots_.size()) slots_.resize(i + 1);
  ++counts_[kind_index(element.kind)];
  ids_->reserve_through(element.id);
  slots_[i] = std::make_shared<const Element>(std::move(element));
}

void PortGraph::link(ElementId holder, ElementId item) { insert_sorted(mutate(holder).incident, item); }
void PortGraph::unlink(ElementId holder, ElementId item) { erase_sorted(mutate(holder).incident, item); }

ElementId PortGraph::add_node(Record record) {
  auto id = ids_->allocate();
  insert_node(id, std::move(record));
  return id;
}

ElementId PortGraph::add_port(ElementId owner, Record record) {
  auto id = ids_->allocate();
  insert_port(id, owner, std::move(record));
  return id;
}

ElementId PortGraph::add_edge(ElementId a, ElementId b, Record record) {
  // Check before allocating so a rejected edge does not consume an id.
  auto* pa = find(a);
  auto* pb = find(b);
  if (!pa || !pb || pa->kind != ElementKind::port || pb->kind != ElementKind::port) {
    throw Error(ErrorCode::invalid_graph, "dangling edge endpoint: edge must join two existing ports");
  }
  if (edge_between(a, b)) {
    throw Error(ErrorCode::invalid_graph,
                fmt::format("duplicate edge between ports #{} and #{}", raw(a), raw(b)));
  }
  auto id = ids_->allocate();
  insert_edge(id, a, b, std::move(record));
  return id;
}

void PortGraph::insert_node(ElementId id, Record record) {
  Element e;
  e.kind = ElementKind::node;
  e.id = id;
  e.record = std::move(record);
  place(std::move(e));
}

void PortGraph::insert_port(ElementId id, ElementId owner, Record record) {
  const auto* o = find(owner);
  if (!o || o->kind != ElementKind::node) {
    throw Error(ErrorCode::invalid_graph,
                fmt::format("orphan port #{}: owner #{} is not a node", raw(id), raw(owner)));
  }
  Element e;
  e.kind = ElementKind::port;
  e.id = id;
  e.owner = owner;
  e.record = std::move(record);
  place(std::move(e));
  link(owner, id);
}

void PortGraph::insert_edge(ElementId id, ElementId a, ElementId b, Record record) {
  auto* pa = find(a);
  auto* pb = find(b);
  if (!pa || !pb || pa->kind != ElementKind::port || pb->kind != ElementKind::port) {
    throw Error(ErrorCode::invalid_graph,
                fmt::format("dangling edge endpoint: edge #{} must join two existing ports", raw(id)));
  }
  if (edge_between(a, b)) {
    throw Error(ErrorCode::invalid_graph,
                fmt::format("duplicate edge between ports #{} and #{}", raw(a), raw(b)));
  }
  Element e;
  e.kind = ElementKind::edge;
  e.id = id;
  e.ends = {a, b};
  e.record = std::move(record);
  place(std::move(e));
  link(a, id);
  if (b != a) link(b, id);
}

void PortGraph::remove_edge(ElementId id) {
  const auto& e = element(id);
  if (e.kind != ElementKind::edge) throw Error(ErrorCode::invalid_graph, "remove_edge: not an edge");
  auto ends = e.ends;
  unlink(ends[0], id);
  if (ends[1] != ends[0]) unlink(ends[1], id);
  slots_[raw(id)].reset();
  --counts_[kind_index(ElementKind::edge)];
}

void PortGraph::remove_port(ElementId id) {
  const auto& p = element(id);
  if (p.kind != ElementKind::port) throw Error(ErrorCode::invalid_graph, "remove_port: not a port");
  auto incident = p.incident;
  auto owner = p.owner;
  for (auto edge : incident) remove_edge(edge);
  unlink(owner, id);
  slots_[raw(id)].reset();
  --counts_[kind_index(ElementKind::port)];
}

void PortGraph::remove_node(ElementId id) {
  const auto& n = element(id);
  if (n.kind != ElementKind::node) throw Error(ErrorCode::invalid_graph, "remove_node: not a node");
  auto ports = n.incident;
  for (auto port : ports) remove_port(port);
  slots_[raw(id)].reset();
  --counts_[kind_index(ElementKind::node)];
}

void PortGraph::reconnect_edge(ElementId edge, ElementId from_port, ElementId to_port) {
  const auto& e = element(edge);
  if (e.kind != ElementKind::edge) throw Error(ErrorCode::invalid_graph, "reconnect: not an edge");
  const auto* target = find(to_port);
  if (!target || target->kind != ElementKind::port) {
    throw Error(ErrorCode::invalid_graph, "reconnect: target is not a port");
  }
  auto ends = e.ends;
  int slot = ends[0] == from_port ? 0 : (ends[1] == from_port ? 1 : -1);
  if (slot < 0) throw Error(ErrorCode::invalid_graph, "reconnect: edge is not incident to port");
  auto other = ends[1 - slot];
  if (auto existing = edge_between(other, to_port); existing && *existing != edge) {
    throw Error(ErrorCode::rewrite_error,
                fmt::format("rewiring would duplicate the edge between ports #{} and #{}",
                            raw(other), raw(to_port)));
  }
  unlink(from_port, edge);
  mutate(edge).ends[slot] = to_port;
  link(to_port, edge);
}

std::optional<Value> PortGraph::property(ElementId id, std::string_view attribute) const {
  return element(id).record.get(attribute);
}

void PortGraph::set_property(ElementId id, std::string_view attribute, Value value) {
  const auto& current = element(id);
  auto declared = signature_->kind_of(current.kind, attribute);
  if (declared && *declared == ValueKind::real && value.kind() == ValueKind::integer) {
    value = Value(value.as_real());
  }
  Record probe;
  probe.set(attribute, value);
  check_record(current.kind, probe);
  if (const auto* existing = current.record.find(attribute); existing && *existing == value) return;
  mutate(id).record.set(attribute, std::move(value));
}

std::optional<ElementId> PortGraph::edge_between(ElementId port_a, ElementId port_b) const {
  const auto* a = find(port_a);
  if (!a || a->kind != ElementKind::port) return std::nullopt;
  for (auto e : a->incident) {
    const auto& edge = *slots_[raw(e)];
    if ((edge.ends[0] == port_a && edge.ends[1] == port_b) ||
        (edge.ends[1] == port_a && edge.ends[0] == port_b)) {
      return e;
    }
  }
  return std::nullopt;
}

std::optional<ElementId> PortGraph::port_named(ElementId node, std::string_view name) const {
  for (auto p : element(node).incident) {
    const auto* v = slots_[raw(p)]->record.find("name");
    if (v && v->kind() == ValueKind::text && v->as_text() == name) return p;
  }
  return std::nullopt;
}

std::vector<ElementId> PortGraph::elements_of(ElementKind kind) const {
  std::vector<ElementId> out;
  out.reserve(counts_[kind_index(kind)]);
  for (std::size_t i = 1; i < slots_.size(); ++i) {
    if (slots_[i] && slots_[i]->kind == kind) out.push_back(ElementId{i});
  }
  return out;
}

std::vector<ElementId> PortGraph::nodes() const { return elements_of(ElementKind::node); }
std::vector<ElementId> PortGraph::ports() const { return elements_of(ElementKind::port); }
std::vector<ElementId> PortGraph::edges() const { return elements_of(ElementKind::edge); }

std::vector<ElementId> PortGraph::all_elements() const {
  std::vector<ElementId> out;
  out.reserve(element_count());
  for (std::size_t i = 1; i < slots_.size(); ++i) {
    if (slots_[i]) out.push_back(ElementId{i});
  }
  return out;
}

void PortGraph::validate() const {
  std::array<std::size_t, 3> seen{};
  std::set<std::pair<ElementId, ElementId>> port_pairs;
  for (std::size_t i = 1; i < slots_.size(); ++i) {
    const auto& slot = slots_[i];
    if (!slot) continue;
    const Element& e = *slot;
    if (raw(e.id) != i) throw Error(ErrorCode::invalid_graph, fmt::format("slot {} holds #{}", i, raw(e.id)));
    ++seen[kind_index(e.kind)];
    std::set<std::string_view> names;
    for (const auto& [name, value] : e.record.entries()) {
      if (!names.insert(name).second) {
        throw Error(ErrorCode::invalid_graph, fmt::format("duplicate attribute '{}' on #{}", name, i));
      }
      auto declared = signature_->kind_of(e.kind, name);
      if (!declared || *declared != value.kind()) {
        throw Error(ErrorCode::kind_mismatch, fmt::format("attribute '{}' on #{} violates signature", name, i));
      }
    }
    switch (e.kind) {
      case ElementKind::node:
        for (auto p : e.incident) {
          const auto* port = find(p);
          if (!port || port->kind != ElementKind::port || port->owner != e.id) {
            throw Error(ErrorCode::invalid_graph, fmt::format("node #{} lists foreign port #{}", i, raw(p)));
          }
        }
        break;
      case ElementKind::port: {
        const auto* owner = find(e.owner);
        if (!owner || owner->kind != ElementKind::node) {
          throw Error(ErrorCode::invalid_graph, fmt::format("orphan port #{}", i));
        }
        if (!std::binary_search(owner->incident.begin(), owner->incident.end(), e.id)) {
          throw Error(ErrorCode::invalid_graph, fmt::format("port #{} missing from owner", i));
        }
        for (auto edge : e.incident) {
          const auto* ed = find(edge);
          if (!ed || ed->kind != ElementKind::edge || (ed->ends[0] != e.id && ed->ends[1] != e.id)) {
            throw Error(ErrorCode::invalid_graph, fmt::format("port #{} lists foreign edge #{}", i, raw(edge)));
          }
        }
        break;
      }
      case ElementKind::edge: {
        for (auto end : e.ends) {
          const auto* port = find(end);
          if (!port || port->kind != ElementKind::port) {
            throw Error(ErrorCode::invalid_graph, fmt::format("dangling edge #{}", i));
          }
          if (!std::binary_search(port->incident.begin(), port->incident.end(), e.id)) {
            throw Error(ErrorCode::invalid_graph, fmt::format("edge #{} missing from port #{}", i, raw(end)));
          }
        }
        auto key = std::minmax(e.ends[0], e.ends[1]);
        if (!port_pairs.insert({key.first, key.second}).second) {
          throw Error(ErrorCode::invalid_graph, fmt::format("duplicate edge between ports #{} and #{}",
                                                            raw(key.first), raw(key.second)));
        }
        break;
      }
    }
  }
  if (seen != counts_) throw Error(ErrorCode::invalid_graph, "element counters out of sync");
}

void PortGraph::restore_slot(ElementId id, ElementPtr element) {
  auto i = raw(id);
  if (i >= slots_.size()) slots_.resize(i + 1);
  if (slots_[i]) --counts_[kind_index(slots_[i]->kind)];
  if (element) ++counts_[kind_index(element->kind)];
  slots_[i] = std::move(element);
  if (slots_[i]) ids_->reserve_through(id);
}

std::vector<ElementId> changed_slots(const PortGraph& before, const PortGraph& after) {
  std::vector<ElementId> out;
  const auto& x = before.slots();
  const auto& y = after.slots();
  for (std::size_t i = 1; i < std::max(x.size(), y.size()); ++i) {
    const Element* a = i < x.size() ? x[i].get() : nullptr;
    const Element* b = i < y.size() ? y[i].get() : nullptr;
    if (a != b) out.push_back(ElementId{i});
  }
  return out;
}

bool operator==(const PortGraph& a, const PortGraph& b) {
  if (a.counts_ != b.counts_) return false;
  auto limit = std::max(a.slots_.size(), b.slots_.size());
  for (std::size_t i = 1; i < limit; ++i) {
    const Element* x = i < a.slots_.size() ? a.slots_[i].get() : nullptr;
    const Element* y = i < b.slots_.size() ? b.slots_[i].get() : nullptr;
    if (x == y) continue;
    if (!x || !y) return false;
    if (x->kind != y->kind || x->id != y->id || x->owner != y->owner || x->ends != y->ends ||
        x->incident != y->incident || !(x->record == y->record)) {
      return false;
    }
  }
  return true;
}

// --- ElementSet / LocatedGraph -----------------------------------------------

ElementSet::ElementSet() : ids_(std::make_shared<const std::vector<ElementId>>()) {}

ElementSet::ElementSet(std::vector<ElementId> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  ids_ = std::make_shared<const std::vector<ElementId>>(std::move(ids));
}

bool ElementSet::contains(ElementId id) const noexcept {
  return std::binary_search(ids_->begin(), ids_->end(), id);
}

bool ElementSet::intersects(std::span<const ElementId> sorted_ids) const noexcept {
  auto a = ids_->begin();
  auto b = sorted_ids.begin();
  while (a != ids_->end() && b != sorted_ids.end()) {
    if (*a == *b) return true;
    if (*a < *b) ++a; else ++b;
  }
  return false;
}

LocatedGraph LocatedGraph::whole(PortGraph graph) {
  auto all = graph.all_elements();
  return LocatedGraph{std::move(graph), ElementSet(std::move(all)), ElementSet()};
}

namespace {

void require_members(const PortGraph& g, const std::vector<ElementId>& ids, const char* what) {
  for (auto id : ids) {
    if (!g.contains(id)) {
      throw Error(ErrorCode::unknown_element,
                  fmt::format("{} set references #{} which is not in the graph", what, raw(id)));
    }
  }
}

}  // namespace

LocatedGraph set_position(const LocatedGraph& located, std::vector<ElementId> ids) {
  require_members(located.graph, ids, "position");
  return LocatedGraph{located.graph, ElementSet(std::move(ids)), located.banned};
}

LocatedGraph set_ban(const LocatedGraph& located, std::vector<ElementId> ids) {
  require_members(located.graph, ids, "banned");
  return LocatedGraph{located.graph, located.position, ElementSet(std::move(ids))};
}

void validate(const LocatedGraph& located) {
  located.graph.validate();
  require_members(located.graph, located.position.ids(), "position");
  require_members(located.graph, located.banned.ids(), "banned");
}

}  // namespace porgysim
