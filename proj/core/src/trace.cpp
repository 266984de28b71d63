#include "porgysim/trace.hpp"

#include <algorithm>
#include <mutex>
#include <unordered_map>

#include <fmt/format.h>

#include "porgysim/error.hpp"
#include "porgysim/graph_io.hpp"

namespace porgysim {

namespace {

Error unknown_state(StateId id) {
  return Error(ErrorCode::unknown_state, fmt::format("unknown state {}", raw(id)));
}

ojson ids_to_json(const std::vector<ElementId>& ids) {
  auto out = ojson::array();
  for (auto id : ids) out.push_back(raw(id));
  return out;
}

std::vector<ElementId> ids_from_json(const ojson& j) {
  std::vector<ElementId> out;
  for (const auto& v : j) out.push_back(ElementId{v.get<std::uint64_t>()});
  return out;
}

ojson slot_to_json(const Element& e) {
  ojson j;
  j["kind"] = to_string(e.kind);
  j["id"] = raw(e.id);
  if (e.kind == ElementKind::port) j["owner"] = raw(e.owner);
  if (e.kind == ElementKind::edge) j["ends"] = {raw(e.ends[0]), raw(e.ends[1])};
  j["incident"] = ids_to_json(e.incident);
  j["properties"] = record_to_json(e.record);
  return j;
}

ElementPtr slot_from_json(const ojson& j) {
  Element e;
  auto kind = j.at("kind").get<std::string>();
  if (kind == "node") e.kind = ElementKind::node;
  else if (kind == "port") e.kind = ElementKind::port;
  else if (kind == "edge") e.kind = ElementKind::edge;
  else throw Error(ErrorCode::parse_error, fmt::format("unknown element kind '{}'", kind));
  e.id = ElementId{j.at("id").get<std::uint64_t>()};
  if (j.contains("owner")) e.owner = ElementId{j["owner"].get<std::uint64_t>()};
  if (j.contains("ends")) {
    e.ends = {ElementId{j["ends"][0].get<std::uint64_t>()}, ElementId{j["ends"][1].get<std::uint64_t>()}};
  }
  e.incident = ids_from_json(j.at("incident"));
  e.record = record_from_json(j.at("properties"));
  return std::make_shared<const Element>(std::move(e));
}

std::optional<ElementKind> element_kind_from(std::string_view s) {
  if (s == "node") return ElementKind::node;
  if (s == "port") return ElementKind::port;
  if (s == "edge") return ElementKind::edge;
  return std::nullopt;
}

std::string format_real(double x) { return fmt::format("{}", x); }

}  // namespace

DerivationTree::DerivationTree(LocatedGraph root, TreeOptions options) : options_(options) {
  if (options_.checkpoint_interval == 0) options_.checkpoint_interval = 1;
  Node n;
  n.info.id = StateId{0};
  n.position = root.position;
  n.banned = root.banned;
  n.signature = root.graph.shared_signature();
  n.full = std::move(root);
  nodes_.push_back(std::move(n));
}

const DerivationTree::Node& DerivationTree::node(StateId id) const {
  auto i = raw(id);
  if (i >= nodes_.size() || nodes_[i].evicted) throw unknown_state(id);
  return nodes_[i];
}

DerivationTree::Node& DerivationTree::node(StateId id) {
  return const_cast<Node&>(static_cast<const DerivationTree&>(*this).node(id));
}

StateId DerivationTree::commit(StateId parent, const LocatedGraph& child, const std::vector<ElementId>& touched,
                               Application application, std::optional<std::size_t> group) {
  std::unique_lock lock(mutex_);
  auto& p = node(parent);
  if (group && *group >= groups_.size()) {
    throw Error(ErrorCode::unknown_state, fmt::format("unknown step group {}", *group));
  }
  Node n;
  n.info.id = StateId{nodes_.size()};
  n.info.parent = parent;
  n.info.depth = p.info.depth + 1;
  n.info.group = group;
  n.info.application = std::move(application);
  for (auto id : touched) n.delta.emplace_back(id, child.graph.shared(id));
  std::sort(n.delta.begin(), n.delta.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  n.position = child.position;
  n.banned = child.banned;
  n.signature = child.graph.shared_signature();
  if (n.info.depth % options_.checkpoint_interval == 0) n.full = child;
  p.info.children.push_back(n.info.id);
  auto id = n.info.id;
  nodes_.push_back(std::move(n));
  if (group) groups_[*group].states.push_back(id);
  return id;
}

std::size_t DerivationTree::open_group(StateId start) {
  std::unique_lock lock(mutex_);
  const auto& s = node(start);
  StepGroup g;
  g.id = groups_.size();
  g.start = start;
  g.step = s.info.group ? groups_[*s.info.group].step + 1 : 1;
  groups_.push_back(g);
  return g.id;
}

void DerivationTree::close_group(std::size_t group) {
  std::unique_lock lock(mutex_);
  if (group >= groups_.size()) throw Error(ErrorCode::unknown_state, fmt::format("unknown step group {}", group));
  groups_[group].complete = true;
  if (!options_.keep_intermediate) fold_group(groups_[group]);
}

void DerivationTree::fold_group(StepGroup& group) {
  if (group.states.size() < 2) return;
  // Only a plain chain can be folded: no branch may hang off an inner state.
  for (std::size_t i = 0; i + 1 < group.states.size(); ++i) {
    const auto& inner = nodes_[raw(group.states[i])];
    if (inner.info.children.size() != 1 || inner.info.children[0] != group.states[i + 1]) return;
  }
  auto& last = nodes_[raw(group.states.back())];
  std::map<ElementId, ElementPtr> merged;
  for (auto sid : group.states) {
    for (const auto& [id, ptr] : nodes_[raw(sid)].delta) merged[id] = ptr;
  }
  last.delta.assign(merged.begin(), merged.end());
  last.info.parent = group.start;
  auto& start = nodes_[raw(group.start)];
  std::replace(start.info.children.begin(), start.info.children.end(), group.states.front(), last.info.id);
  for (std::size_t i = 0; i + 1 < group.states.size(); ++i) {
    auto& inner = nodes_[raw(group.states[i])];
    inner.evicted = true;
    inner.delta.clear();
    inner.full.reset();
  }
  group.states = {last.info.id};
}

LocatedGraph DerivationTree::rebuild(StateId id) const {
  std::vector<const Node*> chain;
  const Node* cur = &node(id);
  while (!cur->full) {
    chain.push_back(cur);
    cur = &nodes_[raw(*cur->info.parent)];
  }
  LocatedGraph out = *cur->full;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    for (const auto& [eid, ptr] : (*it)->delta) out.graph.restore_slot(eid, ptr);
  }
  const Node& target = node(id);
  out.position = target.position;
  out.banned = target.banned;
  out.graph.restore_signature(target.signature);
  return out;
}

LocatedGraph DerivationTree::state(StateId id) const {
  std::shared_lock lock(mutex_);
  return rebuild(id);
}

StateInfo DerivationTree::info(StateId id) const {
  std::shared_lock lock(mutex_);
  return node(id).info;
}

bool DerivationTree::contains(StateId id) const {
  std::shared_lock lock(mutex_);
  auto i = raw(id);
  return i < nodes_.size() && !nodes_[i].evicted;
}

std::size_t DerivationTree::size() const {
  std::shared_lock lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return !n.evicted; }));
}

std::vector<StateId> DerivationTree::leaves() const {
  std::shared_lock lock(mutex_);
  std::vector<StateId> out;
  for (const auto& n : nodes_) {
    if (!n.evicted && n.info.children.empty()) out.push_back(n.info.id);
  }
  return out;
}

std::vector<StateId> DerivationTree::state_ids() const {
  std::shared_lock lock(mutex_);
  std::vector<StateId> out;
  for (const auto& n : nodes_) {
    if (!n.evicted) out.push_back(n.info.id);
  }
  return out;
}

std::vector<StepGroup> DerivationTree::groups() const {
  std::shared_lock lock(mutex_);
  return groups_;
}

StepGroup DerivationTree::group(std::size_t id) const {
  std::shared_lock lock(mutex_);
  if (id >= groups_.size()) throw Error(ErrorCode::unknown_state, fmt::format("unknown step group {}", id));
  return groups_[id];
}

std::vector<StateId> DerivationTree::path(StateId id) const {
  std::shared_lock lock(mutex_);
  std::vector<StateId> out;
  const Node* cur = &node(id);
  for (;;) {
    out.push_back(cur->info.id);
    if (!cur->info.parent) break;
    cur = &nodes_[raw(*cur->info.parent)];
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<BranchStep> DerivationTree::branch_states(StateId leaf) const {
  auto ids = path(leaf);
  std::shared_lock lock(mutex_);
  std::vector<BranchStep> out;
  std::optional<std::size_t> current;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    const auto& n = nodes_[raw(ids[i])];
    if (!n.info.group) continue;
    const auto& g = groups_[*n.info.group];
    auto pos = std::find(g.states.begin(), g.states.end(), ids[i]) - g.states.begin();
    BranchStep entry{g.step, ids[i], static_cast<std::size_t>(pos) + 1,
                     g.complete && ids[i] == g.states.back()};
    if (current == n.info.group) {
      out.back() = entry;
    } else {
      out.push_back(entry);
      current = n.info.group;
    }
  }
  if (out.empty()) out.push_back(BranchStep{0, root(), 0, true});
  return out;
}

std::vector<TraceEntry> DerivationTree::trace_element(ElementId element) const {
  std::shared_lock lock(mutex_);
  std::vector<ElementPtr> at(nodes_.size());
  std::vector<TraceEntry> out;
  for (const auto& n : nodes_) {
    if (n.evicted) continue;
    auto i = raw(n.info.id);
    ElementPtr parent_ptr;
    if (!n.info.parent) {
      at[i] = n.full->graph.shared(element);
    } else {
      parent_ptr = at[raw(*n.info.parent)];
      auto it = std::lower_bound(n.delta.begin(), n.delta.end(), element,
                                 [](const auto& entry, ElementId id) { return entry.first < id; });
      at[i] = (it != n.delta.end() && it->first == element) ? it->second : parent_ptr;
    }
    if (!at[i]) continue;
    bool changed = n.info.parent && (!parent_ptr || !(parent_ptr->record == at[i]->record));
    out.push_back(TraceEntry{n.info.id, at[i]->record, changed});
  }
  if (out.empty()) {
    throw Error(ErrorCode::unknown_element, fmt::format("element #{} never existed in this tree", raw(element)));
  }
  return out;
}

nlohmann::ordered_json DerivationTree::to_json() const {
  std::shared_lock lock(mutex_);
  ojson doc;
  doc["checkpoint_interval"] = options_.checkpoint_interval;
  doc["keep_intermediate"] = options_.keep_intermediate;

  // One signature covering every state.
  Signature merged;
  for (const auto& n : nodes_) {
    if (!n.signature) continue;
    for (const auto& [key, kind] : n.signature->kinds()) merged.declare(key.first, key.second, kind);
  }
  auto sig = ojson::array();
  for (const auto& [key, kind] : merged.kinds()) {
    sig.push_back({{"element", to_string(key.first)}, {"attr", key.second}, {"kind", to_string(kind)}});
  }
  doc["signature"] = std::move(sig);
  doc["root"] = located_to_json(*nodes_[0].full);

  auto states = ojson::array();
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    ojson s;
    s["id"] = i;
    if (n.evicted) {
      s["evicted"] = true;
      states.push_back(std::move(s));
      continue;
    }
    s["parent"] = raw(*n.info.parent);
    s["depth"] = n.info.depth;
    s["group"] = n.info.group ? ojson(*n.info.group) : ojson(nullptr);
    const auto& app = *n.info.application;
    s["rule"] = app.rule;
    s["match"] = ids_to_json(app.match);
    s["image"] = ids_to_json(app.image);
    auto delta = ojson::array();
    for (const auto& [id, ptr] : n.delta) {
      delta.push_back({{"id", raw(id)}, {"element", ptr ? slot_to_json(*ptr) : ojson(nullptr)}});
    }
    s["delta"] = std::move(delta);
    s["position"] = ids_to_json(n.position.ids());
    s["banned"] = ids_to_json(n.banned.ids());
    states.push_back(std::move(s));
  }
  doc["states"] = std::move(states);

  auto groups = ojson::array();
  for (const auto& g : groups_) {
    std::vector<std::uint64_t> members;
    for (auto s : g.states) members.push_back(raw(s));
    groups.push_back(
        {{"id", g.id}, {"step", g.step}, {"start", raw(g.start)}, {"states", members}, {"complete", g.complete}});
  }
  doc["groups"] = std::move(groups);
  return doc;
}

std::unique_ptr<DerivationTree> DerivationTree::from_json(const nlohmann::ordered_json& doc) {
  try {
    TreeOptions options;
    options.checkpoint_interval = doc.value("checkpoint_interval", std::size_t{32});
    options.keep_intermediate = doc.value("keep_intermediate", true);
    auto root = located_from_json(doc.at("root"));

    auto sig = std::make_shared<Signature>(root.graph.signature());
    for (const auto& entry : doc.value("signature", ojson::array())) {
      auto element = element_kind_from(entry.at("element").get<std::string>());
      auto kind = value_kind_from_string(entry.at("kind").get<std::string>());
      if (!element || !kind) throw Error(ErrorCode::parse_error, "bad signature entry");
      sig->declare(*element, entry.at("attr").get<std::string>(), *kind);
    }
    std::shared_ptr<const Signature> shared_sig = sig;
    root.graph.restore_signature(shared_sig);

    auto tree = std::make_unique<DerivationTree>(std::move(root), options);
    tree->nodes_[0].signature = shared_sig;

    for (const auto& s : doc.at("states")) {
      Node n;
      n.info.id = StateId{s.at("id").get<std::uint64_t>()};
      if (raw(n.info.id) != tree->nodes_.size()) throw Error(ErrorCode::parse_error, "states out of order");
      if (s.value("evicted", false)) {
        n.evicted = true;
        tree->nodes_.push_back(std::move(n));
        continue;
      }
      n.info.parent = StateId{s.at("parent").get<std::uint64_t>()};
      auto& parent = tree->node(*n.info.parent);
      n.info.depth = s.at("depth").get<std::size_t>();
      if (!s.at("group").is_null()) n.info.group = s["group"].get<std::size_t>();
      n.info.application = Application{s.at("rule").get<std::string>(), ids_from_json(s.at("match")),
                                       ids_from_json(s.at("image"))};
      for (const auto& d : s.at("delta")) {
        auto id = ElementId{d.at("id").get<std::uint64_t>()};
        n.delta.emplace_back(id, d.at("element").is_null() ? nullptr : slot_from_json(d["element"]));
      }
      n.position = ElementSet(ids_from_json(s.at("position")));
      n.banned = ElementSet(ids_from_json(s.at("banned")));
      n.signature = shared_sig;
      parent.info.children.push_back(n.info.id);
      tree->nodes_.push_back(std::move(n));
    }
    // Checkpoints are rebuilt rather than stored.
    for (auto& n : tree->nodes_) {
      if (n.evicted || !n.info.parent || n.info.depth % options.checkpoint_interval != 0) continue;
      n.full = tree->rebuild(n.info.id);
    }
    for (const auto& g : doc.at("groups")) {
      StepGroup group;
      group.id = g.at("id").get<std::size_t>();
      group.step = g.at("step").get<std::size_t>();
      group.start = StateId{g.at("start").get<std::uint64_t>()};
      for (const auto& s : g.at("states")) group.states.push_back(StateId{s.get<std::uint64_t>()});
      group.complete = g.at("complete").get<bool>();
      tree->groups_.push_back(std::move(group));
    }
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("malformed tree document: {}", e.what()));
  }
}

MetricSeries compute_metrics(const DerivationTree& tree, StateId leaf, std::string model) {
  MetricSeries series;
  series.leaf = leaf;
  series.model = std::move(model);
  std::vector<StateId> states{tree.root()};
  for (const auto& step : tree.branch_states(leaf)) {
    if (step.step > 0) states.push_back(step.state);
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto located = tree.state(states[i]);
    MetricRow row;
    row.step = i + 1;
    row.state = states[i];
    for (auto id : located.graph.nodes()) {
      const auto& rec = located.graph.element(id).record;
      if (const auto* a = rec.find("active"); a && a->kind() == ValueKind::boolean && a->as_bool()) ++row.active;
      if (const auto* v = rec.find("visited"); v && v->kind() == ValueKind::boolean && v->as_bool()) ++row.visited;
    }
    if (row.visited > 0) row.efficiency = static_cast<double>(row.active) / static_cast<double>(row.visited);
    series.rows.push_back(row);
  }
  return series;
}

std::optional<ExportFormat> export_format_from_string(std::string_view name) {
  if (name == "csv" || name == "csv-metrics") return ExportFormat::csv_metrics;
  if (name == "jsonl" || name == "jsonl-events") return ExportFormat::jsonl_events;
  if (name == "dot" || name == "dot-tree") return ExportFormat::dot_tree;
  return std::nullopt;
}

std::string metrics_csv(const MetricSeries& series) {
  std::string out = "step,active,visited,efficiency\n";
  for (const auto& row : series.rows) {
    out += fmt::format("{},{},{},{}\n", row.step, row.active, row.visited,
                       row.efficiency ? format_real(*row.efficiency) : std::string());
  }
  return out;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_trace(const DerivationTree& tree, StateId leaf, ExportFormat format) {
  switch (format) {
    case ExportFormat::csv_metrics:
      return metrics_csv(compute_metrics(tree, leaf));
    case ExportFormat::jsonl_events: {
      std::string out;
      auto ids = tree.path(leaf);
      std::unordered_map<std::size_t, std::size_t> step_of;
      for (const auto& g : tree.groups()) step_of[g.id] = g.step;
      for (std::size_t i = 1; i < ids.size(); ++i) {
        auto info = tree.info(ids[i]);
        ojson ev;
        ev["step"] = info.group ? step_of[*info.group] : 0;
        ev["app"] = info.depth;
        ev["rule"] = info.application->rule;
        ev["parent"] = raw(*info.parent);
        ev["child"] = raw(ids[i]);
        ev["image"] = ids_to_json(info.application->image);
        out += ev.dump();
        out += '\n';
      }
      return out;
    }
    case ExportFormat::dot_tree: {
      std::string out = "digraph derivation {\n  node [shape=circle];\n";
      std::unordered_map<std::size_t, std::size_t> step_of;
      for (const auto& g : tree.groups()) step_of[g.id] = g.step;
      std::vector<StateId> stack{tree.root()};
      std::vector<StateId> order;
      while (!stack.empty()) {
        auto s = stack.back();
        stack.pop_back();
        order.push_back(s);
        auto info = tree.info(s);
        for (auto it = info.children.rbegin(); it != info.children.rend(); ++it) stack.push_back(*it);
      }
      std::sort(order.begin(), order.end());
      for (auto s : order) out += fmt::format("  {};\n", raw(s));
      for (auto s : order) {
        auto info = tree.info(s);
        if (!info.parent) continue;
        out += fmt::format("  {} -> {} [label=\"{}\", step={}];\n", raw(*info.parent), raw(s),
                           dot_escape(info.application->rule), info.group ? step_of[*info.group] : 0);
      }
      out += "}\n";
      return out;
    }
  }
  throw Error(ErrorCode::io_error, "unknown export format");
}

}  // namespace porgysim
