#pragma once

#include <cstddef>
#include <vector>

#include "porgysim/portgraph.hpp"
#include "porgysim/random.hpp"
#include "porgysim/rule.hpp"

namespace porgysim {

enum class MatchMode { deterministic, random };

/// Morphism from the rule's lhs into a host graph.
struct Match {
  /// Host element for each lhs element, aligned with RewriteRule::lhs().
  std::vector<ElementId> host;
  Bindings bindings;

  /// Host image, ascending.
  std::vector<ElementId> image() const;

  friend bool operator==(const Match& a, const Match& b) {
    return a.host == b.host && a.bindings == b.bindings;
  }
};

struct MatchOptions {
  double epsilon = kDefaultEpsilon;
};

/// Every match whose image meets the position set and avoids the banned set.
/// Deterministic mode sorts by the tuple of host ids (lhs order); random
/// mode returns a seeded shuffle of the same collection.
std::vector<Match> find_matches(const RewriteRule& rule, const LocatedGraph& located, RandomSource& rng,
                                MatchMode mode, const MatchOptions& options = {});

/// Re-checks that `match` is a morphism of `rule` into `located` (structure,
/// predicates, injectivity, position/ban).
bool is_valid_match(const RewriteRule& rule, const Match& match, const LocatedGraph& located,
                    const MatchOptions& options = {});

struct Rewritten {
  LocatedGraph state;
  /// Host ids whose slot changed: updated, created, removed or rewired.
  std::vector<ElementId> touched;
  std::vector<ElementId> image;
};

/// Applies `rule` at `match`. All attribute expressions are evaluated
/// against the pre-application state before any write. The input is never
/// modified; on error nothing is produced.
Rewritten apply_rule(const RewriteRule& rule, const Match& match, const LocatedGraph& located,
                     RandomSource& rng);

/// Rule-bound view used to evaluate rhs expressions against a host graph.
class MatchContext final : public EvalContext {
 public:
  MatchContext(const RewriteRule& rule, const Match& match, const PortGraph& host)
      : rule_(rule), match_(match), host_(host) {}

  std::optional<Value> property(const ElementRef& ref, std::string_view attribute) const override;

 private:
  const RewriteRule& rule_;
  const Match& match_;
  const PortGraph& host_;
};

}  // namespace porgysim
