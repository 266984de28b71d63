#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "porgysim/graph_io.hpp"
#include "porgysim/random.hpp"
#include "porgysim/strategy.hpp"

namespace porgysim {

enum class Model { ic, lt };

const char* to_string(Model model) noexcept;
std::optional<Model> model_from_string(std::string_view name) noexcept;

/// IC trial d2s, IC trial s2d, IC activate.
RuleLibrary build_ic_rules();
/// LT trial s2d, LT trial d2s, LT activate.
RuleLibrary build_lt_rules();
RuleLibrary build_rules(Model model);

/// Built-in strategy texts, identical to the shipped .strat assets.
const std::string& ic_strategy_text();
const std::string& lt_strategy_text();
/// The built-in program; `strict_sigma` turns the activation filter into sigma > 1.
StrategyProgram model_strategy(Model model, bool strict_sigma = false);

/// Value source for initial probabilities and thresholds.
///   const:x | uniform:lo,hi | file:path
struct Distribution {
  enum class Kind { constant, uniform, file };
  Kind kind = Kind::constant;
  double lo = 0.0;
  double hi = 0.0;
  std::string path;

  static Distribution parse(std::string_view spec);  // throws config_error
  std::string to_string() const;
  double draw(RandomSource& rng) const;
};

struct ModelConfig {
  Model model = Model::ic;
  /// Node names or numeric element ids.
  std::vector<std::string> seeds;
  /// Absent: edges must already carry p_i2o/p_o2i.
  std::optional<Distribution> probability;
  /// Absent: LT nodes must already carry theta.
  std::optional<Distribution> theta;
  std::uint64_t rng_seed = 0;
  std::size_t max_rounds = 100;
  bool strict_sigma = false;
  MatchMode mode = MatchMode::random;
};

/// Reads {"model": {...}, "init": {...}, "rng": {...}}.
ModelConfig model_config_from_json(const ojson& doc);
ojson model_config_to_json(const ModelConfig& config);
ModelConfig load_model_config(const std::string& path);

/// Node lookup by its `name` property, falling back to a numeric id.
std::optional<ElementId> find_node(const PortGraph& graph, std::string_view name_or_id);

/// The edge joining nodes u and v, and whether u sits on its In side.
struct NodeEdge {
  ElementId edge{};
  bool u_is_in = false;
};
std::optional<NodeEdge> edge_between_nodes(const PortGraph& graph, ElementId u, ElementId v);

/// Materializes the propagation attributes and returns the whole-graph
/// located state. Edge probabilities are drawn first (edges in id order,
/// p_i2o then p_o2i), then thresholds (nodes in id order).
LocatedGraph setup_simulation(const PortGraph& graph, const ModelConfig& config, RandomSource& rng);

/// Per-round probability reload from an edge-list file (`u v p_uv p_vu`).
/// Edges whose probability changed after a trial get their mark cleared so
/// the trial can fold the new value in.
RoundHook probability_reload_hook(std::string path);

}  // namespace porgysim
