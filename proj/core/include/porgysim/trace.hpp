#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "porgysim/portgraph.hpp"

namespace porgysim {

/// Summary of one rule application, attached to the tree edge that
/// produced a state.
struct Application {
  std::string rule;
  std::vector<ElementId> match;  // host ids in lhs order
  std::vector<ElementId> image;  // ascending
};

struct StateInfo {
  StateId id{};
  std::optional<StateId> parent;
  /// Number of applications on the path from the root (root is 0).
  std::size_t depth = 0;
  /// Propagation step the producing application belongs to.
  std::optional<std::size_t> group;
  std::optional<Application> application;
  std::vector<StateId> children;
};

/// One strategy execution. `step` is its ordinal along its branch.
struct StepGroup {
  std::size_t id = 0;
  std::size_t step = 0;
  StateId start{};
  std::vector<StateId> states;
  bool complete = false;
};

struct BranchStep {
  std::size_t step = 0;  // 0 for the root entry
  StateId state{};       // final state of the step
  std::size_t applications = 0;
  bool complete = true;
};

struct MetricRow {
  std::size_t step = 0;  // 1-based row number (row 1 is the initial state)
  StateId state{};
  std::size_t active = 0;
  std::size_t visited = 0;
  std::optional<double> efficiency;
};

struct MetricSeries {
  StateId leaf{};
  std::string model;
  std::vector<MetricRow> rows;
};

struct TraceEntry {
  StateId state{};
  Record record;
  bool changed = false;
};

struct TreeOptions {
  /// Full copies are kept every `checkpoint_interval` applications along a path.
  std::size_t checkpoint_interval = 32;
  /// When false, states strictly inside a closed step are folded away.
  bool keep_intermediate = true;
};

/// Append-only tree of graph states. Children store the slots that differ
/// from their parent; full states are rebuilt on demand. Safe for
/// concurrent readers and appenders.
class DerivationTree {
 public:
  explicit DerivationTree(LocatedGraph root, TreeOptions options = {});

  StateId root() const noexcept { return StateId{0}; }

  /// Appends `child` under `parent`. `touched` lists the ids whose slots
  /// differ (as reported by apply_rule). Throws unknown_state.
  StateId commit(StateId parent, const LocatedGraph& child, const std::vector<ElementId>& touched,
                 Application application, std::optional<std::size_t> group);

  /// Opens a propagation step starting at `start`.
  std::size_t open_group(StateId start);
  void close_group(std::size_t group);

  LocatedGraph state(StateId id) const;
  StateInfo info(StateId id) const;
  bool contains(StateId id) const;
  std::size_t size() const;
  std::vector<StateId> leaves() const;
  /// Every live state id, ascending.
  std::vector<StateId> state_ids() const;
  std::vector<StepGroup> groups() const;
  StepGroup group(std::size_t id) const;

  /// Root-to-`id` path, inclusive.
  std::vector<StateId> path(StateId id) const;

  /// Per-step final states along the branch ending at `leaf`; the root
  /// alone when the branch has no steps.
  std::vector<BranchStep> branch_states(StateId leaf) const;

  std::vector<TraceEntry> trace_element(ElementId element) const;

  const TreeOptions& options() const noexcept { return options_; }

  nlohmann::ordered_json to_json() const;
  static std::unique_ptr<DerivationTree> from_json(const nlohmann::ordered_json& doc);

 private:
  struct Node {
    StateInfo info;
    std::vector<std::pair<ElementId, ElementPtr>> delta;
    ElementSet position;
    ElementSet banned;
    std::shared_ptr<const Signature> signature;
    std::optional<LocatedGraph> full;
    bool evicted = false;
  };

  const Node& node(StateId id) const;
  Node& node(StateId id);
  LocatedGraph rebuild(StateId id) const;
  void fold_group(StepGroup& group);

  TreeOptions options_;
  std::vector<Node> nodes_;
  std::vector<StepGroup> groups_;
  mutable std::shared_mutex mutex_;
};

MetricSeries compute_metrics(const DerivationTree& tree, StateId leaf, std::string model = {});

enum class ExportFormat { csv_metrics, jsonl_events, dot_tree };

std::optional<ExportFormat> export_format_from_string(std::string_view name);

/// Byte-stable exports of the branch ending at `leaf` (dot covers the whole tree).
std::string export_trace(const DerivationTree& tree, StateId leaf, ExportFormat format);

std::string metrics_csv(const MetricSeries& series);

}  // namespace porgysim
