#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "porgysim/ids.hpp"
#include "porgysim/record.hpp"

namespace porgysim {

/// One node, port or edge. Elements are immutable once published into a
/// graph; mutation goes through PortGraph, which swaps in a fresh copy.
struct Element {
  ElementKind kind = ElementKind::node;
  ElementId id{};
  Record record;
  ElementId owner{};                 // ports: owning node
  std::array<ElementId, 2> ends{};   // edges: the two port endpoints
  std::vector<ElementId> incident;   // nodes: owned ports; ports: incident edges (ascending)

  ElementId other_end(ElementId port) const noexcept { return ends[0] == port ? ends[1] : ends[0]; }
};

using ElementPtr = std::shared_ptr<const Element>;

/// Attribute kinds declared per element kind. The first assignment of an
/// attribute fixes its kind for the whole history.
class Signature {
 public:
  std::optional<ValueKind> kind_of(ElementKind element, std::string_view attribute) const;
  void declare(ElementKind element, const std::string& attribute, ValueKind kind);
  const auto& kinds() const noexcept { return kinds_; }

  friend bool operator==(const Signature&, const Signature&) = default;

 private:
  std::map<std::pair<ElementKind, std::string>, ValueKind, std::less<>> kinds_;
};

struct NodeSpec {
  std::vector<Record::Entry> properties;
};
struct PortSpec {
  std::size_t owner = 0;  // index into the node list
  std::vector<Record::Entry> properties;
};
struct EdgeSpec {
  std::size_t from = 0;  // index into the port list
  std::size_t to = 0;
  std::vector<Record::Entry> properties;
};

/// Port graph with property records.
///
/// Copies are cheap: elements are shared between copies and only the slot
/// table is duplicated. Invariants: every port has an existing owner node,
/// every edge joins two existing ports, and at most one edge joins any
/// given pair of ports. Edges are undirected.
class PortGraph {
 public:
  PortGraph();
  explicit PortGraph(std::shared_ptr<IdSource> ids);

  /// Builds a graph from index-linked parts, assigning fresh ids in order
  /// nodes, ports, edges.
  static PortGraph create(std::span<const NodeSpec> nodes, std::span<const PortSpec> ports,
                          std::span<const EdgeSpec> edges);

  ElementId add_node(Record record = {});
  ElementId add_port(ElementId owner, Record record = {});
  ElementId add_edge(ElementId a, ElementId b, Record record = {});

  /// Inserts with an explicit id (deserialization). The id must be unused.
  void insert_node(ElementId id, Record record);
  void insert_port(ElementId id, ElementId owner, Record record);
  void insert_edge(ElementId id, ElementId a, ElementId b, Record record);

  void remove_edge(ElementId id);
  /// Removes the port together with its incident edges.
  void remove_port(ElementId id);
  /// Removes the node together with its ports and their edges.
  void remove_node(ElementId id);
  /// Moves one endpoint of an edge from `from_port` to `to_port`.
  void reconnect_edge(ElementId edge, ElementId from_port, ElementId to_port);

  bool contains(ElementId id) const noexcept;
  const Element* find(ElementId id) const noexcept;
  const Element& element(ElementId id) const;  // throws unknown_element
  ElementPtr shared(ElementId id) const noexcept;

  /// Absent attributes yield nullopt; unknown ids throw.
  std::optional<Value> property(ElementId id, std::string_view attribute) const;
  /// Kind-checked against the signature; integers widen into real attributes.
  void set_property(ElementId id, std::string_view attribute, Value value);

  std::optional<ElementId> edge_between(ElementId port_a, ElementId port_b) const;
  /// Port of `node` whose `name` property equals `name`.
  std::optional<ElementId> port_named(ElementId node, std::string_view name) const;

  std::vector<ElementId> nodes() const;
  std::vector<ElementId> ports() const;
  std::vector<ElementId> edges() const;
  std::vector<ElementId> all_elements() const;
  std::vector<ElementId> elements_of(ElementKind kind) const;

  std::size_t node_count() const noexcept { return counts_[0]; }
  std::size_t port_count() const noexcept { return counts_[1]; }
  std::size_t edge_count() const noexcept { return counts_[2]; }
  std::size_t element_count() const noexcept { return counts_[0] + counts_[1] + counts_[2]; }

  /// Checks every structural invariant; throws Error(invalid_graph).
  void validate() const;

  const Signature& signature() const noexcept { return *signature_; }
  const std::shared_ptr<IdSource>& id_source() const noexcept { return ids_; }

  /// Upper bound (exclusive) of slot indices; ids are < slot_limit().
  std::size_t slot_limit() const noexcept { return slots_.size(); }
  const std::vector<ElementPtr>& slots() const noexcept { return slots_; }

  /// Replaces the slot for `id` wholesale (delta replay). nullptr removes.
  void restore_slot(ElementId id, ElementPtr element);
  void restore_signature(std::shared_ptr<const Signature> sig) { signature_ = std::move(sig); }
  std::shared_ptr<const Signature> shared_signature() const noexcept { return signature_; }

  /// Element-wise equality: same ids, kinds, structure and records.
  friend bool operator==(const PortGraph& a, const PortGraph& b);

 private:
  Element& mutate(ElementId id);
  void place(Element element);
  void check_record(ElementKind kind, const Record& record);
  void link(ElementId holder, ElementId item);
  void unlink(ElementId holder, ElementId item);

  std::vector<ElementPtr> slots_;
  std::array<std::size_t, 3> counts_{};
  std::shared_ptr<IdSource> ids_;
  std::shared_ptr<const Signature> signature_;
};

/// Ids whose slot differs between two graphs of the same history.
std::vector<ElementId> changed_slots(const PortGraph& before, const PortGraph& after);

/// Immutable sorted set of element ids with cheap copies.
class ElementSet {
 public:
  ElementSet();
  explicit ElementSet(std::vector<ElementId> ids);

  bool contains(ElementId id) const noexcept;
  bool intersects(std::span<const ElementId> sorted_ids) const noexcept;
  std::size_t size() const noexcept { return ids_->size(); }
  bool empty() const noexcept { return ids_->empty(); }
  const std::vector<ElementId>& ids() const noexcept { return *ids_; }
  auto begin() const noexcept { return ids_->begin(); }
  auto end() const noexcept { return ids_->end(); }
  bool same_storage(const ElementSet& other) const noexcept { return ids_ == other.ids_; }

  friend bool operator==(const ElementSet& a, const ElementSet& b) {
    return a.ids_ == b.ids_ || *a.ids_ == *b.ids_;
  }

 private:
  std::shared_ptr<const std::vector<ElementId>> ids_;
};

/// A port graph with a position subgraph (where matches must overlap) and a
/// banned subgraph (which matches must avoid).
struct LocatedGraph {
  PortGraph graph;
  ElementSet position;
  ElementSet banned;

  /// Whole graph as position, nothing banned.
  static LocatedGraph whole(PortGraph graph);

  friend bool operator==(const LocatedGraph&, const LocatedGraph&) = default;
};

/// Replace the position (resp. banned) set; ids must belong to the graph.
LocatedGraph set_position(const LocatedGraph& located, std::vector<ElementId> ids);
LocatedGraph set_ban(const LocatedGraph& located, std::vector<ElementId> ids);

/// Checks graph invariants plus position/banned containment.
void validate(const LocatedGraph& located);

}  // namespace porgysim
