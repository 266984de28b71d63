#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "porgysim/error.hpp"
#include "porgysim/rewrite.hpp"
#include "porgysim/rule.hpp"
#include "porgysim/trace.hpp"

namespace porgysim {

/// Property(CrtGraph, Node|Edge|Port, attr CMP value)
struct Filter {
  ElementKind kind = ElementKind::node;
  PropertyPredicate predicate;
  friend bool operator==(const Filter&, const Filter&) = default;
};

struct Instruction {
  enum class Op { apply_once, repeat, set_pos, set_ban };
  Op op = Op::repeat;
  std::string rule;  // apply_once, repeat
  Filter filter;     // set_pos, set_ban
  friend bool operator==(const Instruction&, const Instruction&) = default;
};

struct StrategyProgram {
  std::vector<Instruction> instructions;
  friend bool operator==(const StrategyProgram&, const StrategyProgram&) = default;
};

/// Grammar (whitespace-insensitive, `//` comments):
///   program := [instr (';' instr)* [';']]
///   instr   := 'repeat' '(' name ')' | 'once' '(' name ')'
///            | 'setPos' '(' filter ')' | 'setBan' '(' filter ')'
///   filter  := 'Property' '(' 'CrtGraph' ',' ('Node'|'Edge'|'Port') ',' cond ')'
///   cond    := attr cmp value | 'exists' '(' attr ')'
/// Rule names run up to the closing parenthesis and may contain spaces.
/// Double-quoted numerals are reals; single quotes always mean text.
StrategyProgram parse_strategy(std::string_view text);
std::string print_strategy(const StrategyProgram& program);
std::string print_instruction(const Instruction& instruction);

/// Elements of the given kind whose record satisfies the predicate.
std::vector<ElementId> evaluate_filter(const Filter& filter, const PortGraph& graph,
                                       double epsilon = kDefaultEpsilon);

class RuleLibrary {
 public:
  void add(RewriteRule rule);
  const RewriteRule* find(std::string_view name) const;
  const RewriteRule& at(std::string_view name) const;  // throws strategy_error
  std::vector<std::string> names() const;
  bool empty() const noexcept { return rules_.empty(); }

 private:
  std::map<std::string, RewriteRule, std::less<>> rules_;
};

/// Throws Error(strategy_error) naming the first rule the library lacks.
void check_rules(const StrategyProgram& program, const RuleLibrary& library);

enum class RunStatus { completed, no_progress, aborted };

const char* to_string(RunStatus status) noexcept;

struct AppliedStep {
  std::string rule;
  Match match;
  StateId parent{};
  StateId child{};
  std::vector<ElementId> image;
};

struct StrategyOutcome {
  LocatedGraph state;
  StateId state_id{};
  std::vector<AppliedStep> log;
  RunStatus status = RunStatus::completed;
  std::optional<ErrorCode> error_code;
  std::string error;
  /// Tree step group, absent when nothing was applied.
  std::optional<std::size_t> group;
};

struct RunOptions {
  MatchMode mode = MatchMode::random;
  /// Maximum applications per run (across all rounds).
  std::size_t step_budget = 1'000'000;
  double epsilon = kDefaultEpsilon;
};

/// Executes the program once from `start` (a state of `tree`), committing
/// every application. The execution forms one propagation step.
StrategyOutcome run_strategy(const StrategyProgram& program, const LocatedGraph& located, StateId start,
                             const RuleLibrary& library, RandomSource& rng, const RunOptions& options,
                             DerivationTree& tree);

/// Hook invoked before each round; may rewrite the current state (for
/// example to reload edge probabilities). Returning nullopt keeps it.
using RoundHook = std::function<std::optional<LocatedGraph>(std::size_t round, const LocatedGraph&)>;

/// Re-runs the program until a round applies nothing, a run aborts, or
/// `max_rounds` rounds have executed.
std::vector<StrategyOutcome> run_rounds(const StrategyProgram& program, const LocatedGraph& located,
                                        StateId start, const RuleLibrary& library, RandomSource& rng,
                                        const RunOptions& options, DerivationTree& tree,
                                        std::size_t max_rounds, const RoundHook& hook = {});

}  // namespace porgysim
