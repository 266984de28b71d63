#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "porgysim/random.hpp"
#include "porgysim/record.hpp"

namespace porgysim {

/// How an expression names a rule element.
///   v.property("a")          -> named  {"v"}
///   node(v).property("a")    -> node   {"v"}
///   port(p).property("a")    -> port   {"p"}
///   edge(v,w).property("a")  -> edge   {"v","w"}  (the edge joining nodes v and w)
///   edge(e).property("a")    -> edge   {"e"}
struct ElementRef {
  enum class Form { named, node, port, edge };
  Form form = Form::named;
  std::string first;
  std::string second;

  std::string to_string() const;
  friend bool operator==(const ElementRef&, const ElementRef&) = default;
};

/// Resolves property reads during evaluation.
class EvalContext {
 public:
  virtual ~EvalContext() = default;
  /// Returns the attribute value, nullopt when the attribute is absent.
  /// Throws Error(expression_error) when the reference is unbound.
  virtual std::optional<Value> property(const ElementRef& ref, std::string_view attribute) const = 0;
};

/// Attribute-update expression attached to a right-hand-side record.
///
///   expr  := sum
///   sum   := prod (('+'|'-') prod)*
///   prod  := unary (('*'|'/') unary)*
///   unary := '-' unary | atom
///   atom  := number | string | true | false | '(' expr ')'
///          | ref '.' 'property' '(' string ')'
///          | func '(' expr (',' expr)* ')'
///
/// Functions: max, min, random(X) in (0, X], and the influence helpers
/// joint_add(j,p), joint_remove(j,p), joint_replace(j,old,new),
/// threshold_ratio(x,theta) (x/theta; with theta 0 it is 2 for x > 0, else 0).
class Expression {
 public:
  struct Node;

  Expression();
  static Expression parse(std::string_view text);
  static Expression literal(Value value);

  /// Pure except for RandomSource consumption; arguments are evaluated
  /// left to right.
  Value evaluate(const EvalContext& context, RandomSource& rng) const;

  const std::string& source() const noexcept { return source_; }
  /// Every element reference in the expression, in source order.
  std::vector<ElementRef> references() const;
  bool is_literal() const noexcept;
  std::optional<Value> literal_value() const;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace porgysim
