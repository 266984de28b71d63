#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "porgysim/expression.hpp"
#include "porgysim/ids.hpp"
#include "porgysim/record.hpp"

namespace porgysim {

inline constexpr double kDefaultEpsilon = 1e-9;

enum class Comparator { eq, ne, lt, le, gt, ge, exists };

const char* to_string(Comparator cmp) noexcept;
std::optional<Comparator> comparator_from_string(std::string_view text) noexcept;

/// Pattern variable operand: the first occurrence binds, later ones must agree.
struct Variable {
  std::string name;
  friend bool operator==(const Variable&, const Variable&) = default;
};

struct PropertyPredicate {
  std::string attribute;
  Comparator cmp = Comparator::exists;
  std::variant<std::monostate, Value, Variable> operand;

  /// Throws Error(invalid_rule) when the comparator cannot apply to the operand kind.
  void check() const;

  /// Absolute-tolerance comparison: `x >= t` holds when x >= t - epsilon.
  bool holds(const Value& actual, const Value& expected, double epsilon) const;

  std::string to_string() const;
  friend bool operator==(const PropertyPredicate&, const PropertyPredicate&) = default;
};

/// Values bound to pattern variables during matching.
using Bindings = std::map<std::string, Value, std::less<>>;

/// Tests a record against predicates, extending `bindings`. Returns false on
/// any failure; `bindings` is then left in an unspecified state.
bool satisfies(const Record& record, const std::vector<PropertyPredicate>& predicates,
               Bindings& bindings, double epsilon);

/// Rule element; ids are local to the rule (lhs, rhs and arrow share them).
struct RuleElement {
  ElementKind kind = ElementKind::node;
  ElementId id{};
  std::string name;
  ElementId owner{};
  std::array<ElementId, 2> ends{};
};

struct PatternElement : RuleElement {
  std::vector<PropertyPredicate> predicates;
};

struct Assignment {
  std::string attribute;
  Expression expression;
};

struct TemplateElement : RuleElement {
  std::vector<Assignment> assignments;
};

struct ArrowPort {
  ElementId id{};
  std::string type;  // only "bridge" is supported
};

struct ArrowEdge {
  ElementId arrow_port{};
  ElementId target{};  // a port in lhs or rhs
};

/// Port graph rewrite rule L => R with an arrow node.
///
/// A bridge port joined to lhs port `l` and rhs port `r` states that `l`
/// survives as `r`: the host port keeps its id and its external edges. An
/// rhs node survives the lhs node whose ports bridge into it; an rhs edge
/// survives the lhs edge joining the corresponding surviving ports.
class RewriteRule {
 public:
  RewriteRule() = default;
  RewriteRule(std::string name, std::vector<PatternElement> lhs, std::vector<TemplateElement> rhs,
              std::vector<ArrowPort> arrow_ports, std::vector<ArrowEdge> arrow_edges,
              std::optional<std::vector<ElementId>> position_update = std::nullopt,
              std::optional<std::vector<ElementId>> ban_update = std::nullopt);

  const std::string& name() const noexcept { return name_; }
  const std::vector<PatternElement>& lhs() const noexcept { return lhs_; }
  const std::vector<TemplateElement>& rhs() const noexcept { return rhs_; }
  const std::vector<ArrowPort>& arrow_ports() const noexcept { return arrow_ports_; }
  const std::vector<ArrowEdge>& arrow_edges() const noexcept { return arrow_edges_; }
  const std::optional<std::vector<ElementId>>& position_update() const noexcept { return j_; }
  const std::optional<std::vector<ElementId>>& ban_update() const noexcept { return k_; }

  /// Index of the lhs element with the given rule-local id, or npos.
  std::size_t lhs_index(ElementId id) const noexcept;
  std::size_t rhs_index(ElementId id) const noexcept;
  std::size_t lhs_index_by_name(std::string_view name) const noexcept;
  std::size_t rhs_index_by_name(std::string_view name) const noexcept;

  /// The lhs element an expression reference reads from. rhs names resolve
  /// to the lhs element they survive. Returns npos when unresolvable.
  std::size_t resolve(const ElementRef& ref) const;

  /// rhs ports each lhs port bridges to (lhs index -> rhs indices).
  const std::vector<std::vector<std::size_t>>& bridges() const noexcept { return bridges_; }
  /// For each rhs element: the lhs element it survives, or npos if new.
  const std::vector<std::size_t>& survivor_of() const noexcept { return survivor_of_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  void validate_and_derive();

  std::string name_;
  std::vector<PatternElement> lhs_;
  std::vector<TemplateElement> rhs_;
  std::vector<ArrowPort> arrow_ports_;
  std::vector<ArrowEdge> arrow_edges_;
  std::optional<std::vector<ElementId>> j_;
  std::optional<std::vector<ElementId>> k_;

  std::vector<std::vector<std::size_t>> bridges_;
  std::vector<std::size_t> survivor_of_;
  std::map<std::string, std::size_t, std::less<>> resolved_;
};

}  // namespace porgysim
