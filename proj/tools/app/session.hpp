#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <porgysim/models.hpp>
#include <porgysim/trace.hpp>

namespace porgysim::app {

/// One simulation being explored: input, rules, strategy, tree, rng and cursor.
struct Session {
  std::string id;
  ModelConfig config;
  RuleLibrary rules;
  bool custom_rules = false;
  std::string strategy_text;
  StrategyProgram program;
  std::unique_ptr<DerivationTree> tree;
  SeededRandom rng;
  StateId cursor{};
  /// Position set by the client, applied to the next run or application.
  std::optional<ElementSet> position_override;
  std::optional<std::string> reload_path;

  /// Held while a mutation is in progress; contenders are rejected, not queued.
  std::mutex mutation;
};

struct SessionSpec {
  PortGraph graph;
  ModelConfig config;
  std::optional<std::string> strategy_text;  // default: the model's program
  std::vector<RewriteRule> rules;            // default: the model's rules
  std::optional<std::string> reload_path;
  TreeOptions tree_options;
};

std::unique_ptr<Session> create_session(std::string id, SessionSpec spec);

/// The cursor state with any pending position override applied.
LocatedGraph cursor_state(const Session& session);

/// Runs up to `rounds` propagation steps from the cursor and moves the
/// cursor to the last committed state.
std::vector<StrategyOutcome> advance(Session& session, std::size_t rounds);

struct Applied {
  StateId parent{};
  StateId child{};
  std::vector<ElementId> image;
  std::size_t step = 0;
};

/// Applies one named rule at an explicit match (host ids in lhs order) or,
/// when `match` is empty, at a match chosen by the session's rng. Forms a
/// step of its own. Throws rewrite_error when no usable match exists.
Applied apply_once(Session& session, const std::string& rule, const std::vector<ElementId>& match);

ojson session_to_json(const Session& session);
std::unique_ptr<Session> session_from_json(const ojson& doc);

void save_session(const Session& session, const std::string& path);
std::unique_ptr<Session> load_session(const std::string& path);

}  // namespace porgysim::app
