#include "porgysim/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <variant>

#include <fmt/format.h>

#include "porgysim/error.hpp"
#include "porgysim/influence.hpp"

namespace porgysim {

std::string ElementRef::to_string() const {
  switch (form) {
    case Form::named: return first;
    case Form::node: return fmt::format("node({})", first);
    case Form::port: return fmt::format("port({})", first);
    case Form::edge:
      return second.empty() ? fmt::format("edge({})", first) : fmt::format("edge({},{})", first, second);
  }
  return first;
}

struct Expression::Node {
  struct Literal {
    Value value;
  };
  struct Property {
    ElementRef ref;
    std::string attribute;
  };
  struct Binary {
    char op;
    std::shared_ptr<const Node> lhs, rhs;
  };
  struct Negate {
    std::shared_ptr<const Node> operand;
  };
  struct Call {
    std::string function;
    std::vector<std::shared_ptr<const Node>> args;
  };
  std::variant<Literal, Property, Binary, Negate, Call> data;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Expression::Node::Literal v) { return std::make_shared<Expression::Node>(Expression::Node{std::move(v)}); }
template <class T>
NodePtr make(T v) {
  return std::make_shared<Expression::Node>(Expression::Node{std::move(v)});
}

struct FunctionSpec {
  std::string_view name;
  std::size_t arity;
};

constexpr FunctionSpec kFunctions[] = {
    {"max", 2},        {"min", 2},          {"random", 1},        {"joint_add", 2},
    {"joint_remove", 2}, {"joint_replace", 3}, {"threshold_ratio", 2},
};

const FunctionSpec* function_spec(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    auto node = sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    auto [line, column] = line_column(text_, pos_);
    throw ParseError(fmt::format("expression: {}", message), line, column, pos_);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(fmt::format("expected '{}'", c));
  }

  static bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
  }

  std::string identifier() {
    skip_space();
    if (pos_ >= text_.size() || !ident_start(text_[pos_])) fail("expected an identifier");
    auto start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string string_literal() {
    skip_space();
    if (pos_ >= text_.size() || text_[pos_] != '"') fail("expected a string literal");
    ++pos_;
    std::string out;
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out.push_back(text_[pos_++]);
    }
    if (pos_ >= text_.size()) fail("unterminated string literal");
    ++pos_;
    return out;
  }

  NodePtr sum() {
    auto lhs = product();
    for (;;) {
      if (accept('+')) {
        lhs = make(Expression::Node::Binary{'+', lhs, product()});
      } else if (accept('-')) {
        lhs = make(Expression::Node::Binary{'-', lhs, product()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr product() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Expression::Node::Binary{'*', lhs, unary()});
      } else if (accept('/')) {
        lhs = make(Expression::Node::Binary{'/', lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Expression::Node::Negate{unary()});
    return atom();
  }

  NodePtr number() {
    auto start = pos_;
    bool real = false;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        real = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
      } else {
        break;
      }
    }
    auto token = text_.substr(start, pos_ - start);
    if (real) {
      double v = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || p != token.data() + token.size()) {
        pos_ = start;
        fail("malformed number");
      }
      return make(Expression::Node::Literal{Value(v)});
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || p != token.data() + token.size()) {
      pos_ = start;
      fail("malformed integer");
    }
    return make(Expression::Node::Literal{Value(v)});
  }

  NodePtr property_suffix(ElementRef ref) {
    expect('.');
    auto member = identifier();
    if (member != "property") fail(fmt::format("unknown member '{}', expected 'property'", member));
    expect('(');
    auto attribute = string_literal();
    expect(')');
    return make(Expression::Node::Property{std::move(ref), std::move(attribute)});
  }

  NodePtr atom() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '"') return make(Expression::Node::Literal{Value(string_literal())});
    if (accept('(')) {
      auto inner = sum();
      expect(')');
      return inner;
    }
    auto name = identifier();
    if (name == "true") return make(Expression::Node::Literal{Value(true)});
    if (name == "false") return make(Expression::Node::Literal{Value(false)});

    if (name == "node" || name == "port" || name == "edge") {
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        ++pos_;
        ElementRef ref;
        ref.form = name == "node" ? ElementRef::Form::node
                   : name == "port" ? ElementRef::Form::port
                                    : ElementRef::Form::edge;
        ref.first = identifier();
        if (ref.form == ElementRef::Form::edge && accept(',')) ref.second = identifier();
        expect(')');
        return property_suffix(std::move(ref));
      }
    }

    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      const auto* spec = function_spec(name);
      if (!spec) fail(fmt::format("unknown function '{}'", name));
      ++pos_;
      Expression::Node::Call call{name, {}};
      call.args.push_back(sum());
      while (accept(',')) call.args.push_back(sum());
      expect(')');
      if (call.args.size() != spec->arity) {
        fail(fmt::format("{} takes {} argument(s), got {}", name, spec->arity, call.args.size()));
      }
      return make(std::move(call));
    }
    return property_suffix(ElementRef{ElementRef::Form::named, name, {}});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void eval_fail(const std::string& message) {
  throw Error(ErrorCode::expression_error, message);
}

double numeric(const Value& v, std::string_view where) {
  if (!v.is_numeric()) {
    throw Error(ErrorCode::kind_mismatch,
                fmt::format("{}: expected a number, got {}", where, to_string(v.kind())));
  }
  return v.as_real();
}

Value eval(const Expression::Node& node, const EvalContext& ctx, RandomSource& rng) {
  return std::visit(
      [&](const auto& n) -> Value {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expression::Node::Literal>) {
          return n.value;
        } else if constexpr (std::is_same_v<T, Expression::Node::Property>) {
          auto v = ctx.property(n.ref, n.attribute);
          if (!v) eval_fail(fmt::format("{} has no property '{}'", n.ref.to_string(), n.attribute));
          return *v;
        } else if constexpr (std::is_same_v<T, Expression::Node::Negate>) {
          auto v = eval(*n.operand, ctx, rng);
          if (v.kind() == ValueKind::integer) return Value(-v.as_int());
          return Value(-numeric(v, "negation"));
        } else if constexpr (std::is_same_v<T, Expression::Node::Binary>) {
          auto a = eval(*n.lhs, ctx, rng);
          auto b = eval(*n.rhs, ctx, rng);
          auto where = fmt::format("operator '{}'", n.op);
          double x = numeric(a, where);
          double y = numeric(b, where);
          bool ints = a.kind() == ValueKind::integer && b.kind() == ValueKind::integer;
          switch (n.op) {
            case '+': return ints ? Value(a.as_int() + b.as_int()) : Value(x + y);
            case '-': return ints ? Value(a.as_int() - b.as_int()) : Value(x - y);
            case '*': return ints ? Value(a.as_int() * b.as_int()) : Value(x * y);
            case '/':
              if (y == 0.0) eval_fail("division by zero");
              return Value(x / y);
          }
          eval_fail("unknown operator");
        } else {
          std::vector<Value> args;
          args.reserve(n.args.size());
          for (const auto& a : n.args) args.push_back(eval(*a, ctx, rng));
          const auto& f = n.function;
          if (f == "max" || f == "min") {
            double x = numeric(args[0], f);
            double y = numeric(args[1], f);
            bool ints = args[0].kind() == ValueKind::integer && args[1].kind() == ValueKind::integer;
            bool first = f == "max" ? x >= y : x <= y;
            if (ints) return first ? args[0] : args[1];
            return Value(first ? x : y);
          }
          if (f == "random") {
            double bound = numeric(args[0], f);
            if (!(bound > 0.0)) eval_fail(fmt::format("random({}) needs a positive bound", bound));
            return Value(bound * rng.open_unit());
          }
          if (f == "joint_add") return Value(add_influence(numeric(args[0], f), numeric(args[1], f)));
          if (f == "joint_remove") return Value(remove_influence(numeric(args[0], f), numeric(args[1], f)));
          if (f == "joint_replace") {
            return Value(replace_influence(numeric(args[0], f), numeric(args[1], f), numeric(args[2], f)));
          }
          if (f == "threshold_ratio") {
            double x = numeric(args[0], f);
            double theta = numeric(args[1], f);
            // Zero threshold: any positive influence is enough to activate.
            if (theta == 0.0) return Value(x > 0.0 ? 2.0 : 0.0);
            return Value(x / theta);
          }
          eval_fail(fmt::format("unknown function '{}'", f));
        }
      },
      node.data);
}

void collect_refs(const Expression::Node& node, std::vector<ElementRef>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Expression::Node::Property>) {
          out.push_back(n.ref);
        } else if constexpr (std::is_same_v<T, Expression::Node::Binary>) {
          collect_refs(*n.lhs, out);
          collect_refs(*n.rhs, out);
        } else if constexpr (std::is_same_v<T, Expression::Node::Negate>) {
          collect_refs(*n.operand, out);
        } else if constexpr (std::is_same_v<T, Expression::Node::Call>) {
          for (const auto& a : n.args) collect_refs(*a, out);
        }
      },
      node.data);
}

}  // namespace

Expression::Expression() : root_(make(Node::Literal{Value(false)})), source_("false") {}

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.source_ = std::string(text);
  return e;
}

Expression Expression::literal(Value value) {
  Expression e;
  e.source_ = value.to_display();
  e.root_ = make(Node::Literal{std::move(value)});
  return e;
}

Value Expression::evaluate(const EvalContext& context, RandomSource& rng) const {
  return eval(*root_, context, rng);
}

std::vector<ElementRef> Expression::references() const {
  std::vector<ElementRef> out;
  collect_refs(*root_, out);
  return out;
}

bool Expression::is_literal() const noexcept {
  return std::holds_alternative<Node::Literal>(root_->data);
}

std::optional<Value> Expression::literal_value() const {
  if (const auto* lit = std::get_if<Node::Literal>(&root_->data)) return lit->value;
  return std::nullopt;
}

}  // namespace porgysim
