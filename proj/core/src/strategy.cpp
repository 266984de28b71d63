#include "porgysim/strategy.hpp"

#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace porgysim {

// --- parser ------------------------------------------------------------------

namespace {

class StrategyParser {
 public:
  explicit StrategyParser(std::string_view text) : text_(text) {}

  StrategyProgram parse() {
    StrategyProgram program;
    skip();
    while (!at_end()) {
      program.instructions.push_back(instruction());
      skip();
      if (at_end()) break;
      expect(';');
      skip();
    }
    return program;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& message, std::size_t at) const {
    auto [line, col] = line_column(text_, at);
    throw ParseError(message, line, col, at);
  }
  [[noreturn]] void fail(const std::string& message) const { fail(message, pos_); }

  void skip() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        ++pos_;
      } else if (text_.substr(pos_, 2) == "//") {
        while (!at_end() && peek() != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip();
    if (peek() != c) {
      if (at_end()) fail(fmt::format("expected '{}' but reached end of input", c));
      fail(fmt::format("expected '{}' but found '{}'", c, peek()));
    }
    ++pos_;
  }

  std::string word() {
    skip();
    auto start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  Instruction instruction() {
    auto start = pos_;
    auto keyword = word();
    Instruction ins;
    if (keyword == "repeat" || keyword == "once") {
      ins.op = keyword == "repeat" ? Instruction::Op::repeat : Instruction::Op::apply_once;
      expect('(');
      ins.rule = rule_name();
      expect(')');
    } else if (keyword == "setPos" || keyword == "setBan") {
      ins.op = keyword == "setPos" ? Instruction::Op::set_pos : Instruction::Op::set_ban;
      expect('(');
      ins.filter = filter();
      expect(')');
    } else if (keyword.empty()) {
      fail(fmt::format("expected an instruction but found '{}'", peek()), start);
    } else {
      fail(fmt::format("unknown instruction '{}'", keyword), start);
    }
    return ins;
  }

  std::string rule_name() {
    skip();
    auto start = pos_;
    while (!at_end() && peek() != ')' && peek() != '(' && peek() != ';' && peek() != '\n') ++pos_;
    auto name = text_.substr(start, pos_ - start);
    while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.remove_suffix(1);
    if (name.empty()) fail("empty rule name", start);
    if (peek() != ')') fail("unterminated rule name");
    return std::string(name);
  }

  Filter filter() {
    auto start = (skip(), pos_);
    if (word() != "Property") fail("expected 'Property'", start);
    expect('(');
    start = (skip(), pos_);
    if (word() != "CrtGraph") fail("expected 'CrtGraph'", start);
    expect(',');
    start = (skip(), pos_);
    auto kind = word();
    Filter f;
    if (kind == "Node") f.kind = ElementKind::node;
    else if (kind == "Edge") f.kind = ElementKind::edge;
    else if (kind == "Port") f.kind = ElementKind::port;
    else fail(fmt::format("expected Node, Edge or Port but found '{}'", kind), start);
    expect(',');
    f.predicate = condition();
    expect(')');
    return f;
  }

  PropertyPredicate condition() {
    skip();
    auto start = pos_;
    auto attr = attribute();
    PropertyPredicate pred;
    skip();
    if (attr == "exists" && peek() == '(') {
      ++pos_;
      pred.attribute = attribute();
      pred.cmp = Comparator::exists;
      expect(')');
      return pred;
    }
    if (attr.empty()) fail("expected an attribute name", start);
    pred.attribute = std::move(attr);
    auto cmp_start = pos_;
    std::string op;
    while (!at_end() && std::string_view("<>=!").find(peek()) != std::string_view::npos) op += text_[pos_++];
    auto cmp = comparator_from_string(op);
    if (!cmp || *cmp == Comparator::exists) fail(fmt::format("expected a comparator but found '{}'", op), cmp_start);
    pred.cmp = *cmp;
    auto value_start = (skip(), pos_);
    pred.operand = value();
    try {
      pred.check();
    } catch (const Error& e) {
      fail(e.what(), value_start);
    }
    return pred;
  }

  std::string attribute() {
    skip();
    auto start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '\'' ||
                         peek() == '.')) {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  static std::optional<double> as_number(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
  }

  Value value() {
    skip();
    auto start = pos_;
    char q = peek();
    if (q == '"' || q == '\'') {
      ++pos_;
      std::string body;
      while (!at_end() && peek() != q) {
        if (peek() == '\\' && pos_ + 1 < text_.size()) ++pos_;
        body += text_[pos_++];
      }
      if (at_end()) fail("unterminated string", start);
      ++pos_;
      if (q == '"') {
        if (auto n = as_number(body)) return Value(*n);
        if (body == "true") return Value(true);
        if (body == "false") return Value(false);
      }
      return Value(std::move(body));
    }
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '-' ||
                         peek() == '+')) {
      ++pos_;
    }
    auto tok = text_.substr(start, pos_ - start);
    if (tok.empty()) fail("expected a value", start);
    if (tok == "true") return Value(true);
    if (tok == "false") return Value(false);
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
    if (ec == std::errc() && ptr == tok.data() + tok.size()) return Value(i);
    if (auto n = as_number(tok)) return Value(*n);
    fail(fmt::format("bad value '{}'", tok), start);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string print_value(const Value& v) {
  switch (v.kind()) {
    case ValueKind::boolean: return v.as_bool() ? "true" : "false";
    case ValueKind::integer: return fmt::format("{}", v.as_int());
    case ValueKind::real: return fmt::format("\"{}\"", v.as_real());
    case ValueKind::text: {
      std::string out;
      for (char c : v.as_text()) {
        if (c == '\'' || c == '\\') out += '\\';
        out += c;
      }
      return "'" + out + "'";
    }
    case ValueKind::ref: break;
  }
  throw Error(ErrorCode::strategy_error, "element references cannot appear in filters");
}

const char* kind_keyword(ElementKind k) {
  switch (k) {
    case ElementKind::node: return "Node";
    case ElementKind::port: return "Port";
    case ElementKind::edge: return "Edge";
  }
  return "Node";
}

}  // namespace

StrategyProgram parse_strategy(std::string_view text) { return StrategyParser(text).parse(); }

std::string print_instruction(const Instruction& ins) {
  switch (ins.op) {
    case Instruction::Op::repeat: return fmt::format("repeat({})", ins.rule);
    case Instruction::Op::apply_once: return fmt::format("once({})", ins.rule);
    case Instruction::Op::set_pos:
    case Instruction::Op::set_ban: {
      const auto& p = ins.filter.predicate;
      std::string cond;
      if (p.cmp == Comparator::exists) {
        cond = fmt::format("exists({})", p.attribute);
      } else {
        cond = fmt::format("{}{}{}", p.attribute, to_string(p.cmp), print_value(std::get<Value>(p.operand)));
      }
      return fmt::format("{}(Property(CrtGraph,{},{}))", ins.op == Instruction::Op::set_pos ? "setPos" : "setBan",
                         kind_keyword(ins.filter.kind), cond);
    }
  }
  return {};
}

std::string print_strategy(const StrategyProgram& program) {
  std::string out;
  for (std::size_t i = 0; i < program.instructions.size(); ++i) {
    if (i) out += ";\n";
    out += print_instruction(program.instructions[i]);
  }
  if (!out.empty()) out += '\n';
  return out;
}

std::vector<ElementId> evaluate_filter(const Filter& filter, const PortGraph& graph, double epsilon) {
  std::vector<ElementId> out;
  std::vector<PropertyPredicate> preds{filter.predicate};
  for (const auto& slot : graph.slots()) {
    if (!slot || slot->kind != filter.kind) continue;
    Bindings unused;
    if (satisfies(slot->record, preds, unused, epsilon)) out.push_back(slot->id);
  }
  return out;
}

// --- rule library ------------------------------------------------------------

void RuleLibrary::add(RewriteRule rule) {
  auto name = rule.name();
  rules_.insert_or_assign(std::move(name), std::move(rule));
}

const RewriteRule* RuleLibrary::find(std::string_view name) const {
  auto it = rules_.find(name);
  return it == rules_.end() ? nullptr : &it->second;
}

const RewriteRule& RuleLibrary::at(std::string_view name) const {
  if (const auto* r = find(name)) return *r;
  throw Error(ErrorCode::strategy_error, fmt::format("unknown rule '{}'", name));
}

std::vector<std::string> RuleLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : rules_) out.push_back(name);
  return out;
}

void check_rules(const StrategyProgram& program, const RuleLibrary& library) {
  for (const auto& ins : program.instructions) {
    if (ins.op == Instruction::Op::repeat || ins.op == Instruction::Op::apply_once) library.at(ins.rule);
  }
}

const char* to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::completed: return "completed";
    case RunStatus::no_progress: return "no-progress";
    case RunStatus::aborted: return "aborted";
  }
  return "?";
}

// --- interpreter -------------------------------------------------------------

namespace {

struct Interpreter {
  const RuleLibrary& library;
  RandomSource& rng;
  const RunOptions& options;
  DerivationTree& tree;
  std::size_t& budget_used;

  StrategyOutcome out;

  /// Applies one match of `rule`; false when none exists.
  bool step(const RewriteRule& rule) {
    MatchOptions mo{options.epsilon};
    auto matches = find_matches(rule, out.state, rng, options.mode, mo);
    if (matches.empty()) return false;
    if (budget_used >= options.step_budget) {
      throw Error(ErrorCode::budget_exceeded,
                  fmt::format("step budget of {} applications exhausted", options.step_budget));
    }
    auto& match = matches.front();
    auto result = apply_rule(rule, match, out.state, rng);
    if (!out.group) out.group = tree.open_group(out.state_id);
    auto child = tree.commit(out.state_id, result.state, result.touched,
                             Application{rule.name(), match.host, result.image}, out.group);
    out.log.push_back(AppliedStep{rule.name(), std::move(match), out.state_id, child, std::move(result.image)});
    out.state = std::move(result.state);
    out.state_id = child;
    ++budget_used;
    return true;
  }

  void run(const StrategyProgram& program) {
    for (const auto& ins : program.instructions) {
      switch (ins.op) {
        case Instruction::Op::apply_once:
          if (!step(library.at(ins.rule))) out.status = RunStatus::no_progress;
          break;
        case Instruction::Op::repeat: {
          const auto& rule = library.at(ins.rule);
          while (step(rule)) {
          }
          break;
        }
        case Instruction::Op::set_pos:
          out.state.position = ElementSet(evaluate_filter(ins.filter, out.state.graph, options.epsilon));
          break;
        case Instruction::Op::set_ban:
          out.state.banned = ElementSet(evaluate_filter(ins.filter, out.state.graph, options.epsilon));
          break;
      }
    }
  }
};

StrategyOutcome run_once(const StrategyProgram& program, const LocatedGraph& located, StateId start,
                         const RuleLibrary& library, RandomSource& rng, const RunOptions& options,
                         DerivationTree& tree, std::size_t& budget_used) {
  check_rules(program, library);
  Interpreter in{library, rng, options, tree, budget_used, {}};
  in.out.state = located;
  in.out.state_id = start;
  try {
    in.run(program);
  } catch (const Error& e) {
    in.out.status = RunStatus::aborted;
    in.out.error_code = e.code();
    in.out.error = e.what();
    return std::move(in.out);
  }
  if (in.out.group) tree.close_group(*in.out.group);
  return std::move(in.out);
}

}  // namespace

StrategyOutcome run_strategy(const StrategyProgram& program, const LocatedGraph& located, StateId start,
                             const RuleLibrary& library, RandomSource& rng, const RunOptions& options,
                             DerivationTree& tree) {
  std::size_t used = 0;
  return run_once(program, located, start, library, rng, options, tree, used);
}

std::vector<StrategyOutcome> run_rounds(const StrategyProgram& program, const LocatedGraph& located,
                                        StateId start, const RuleLibrary& library, RandomSource& rng,
                                        const RunOptions& options, DerivationTree& tree,
                                        std::size_t max_rounds, const RoundHook& hook) {
  if (max_rounds == 0) throw Error(ErrorCode::strategy_error, "max rounds must be at least 1");
  check_rules(program, library);
  std::vector<StrategyOutcome> rounds;
  LocatedGraph current = located;
  StateId current_id = start;
  std::size_t used = 0;
  for (std::size_t r = 1; r <= max_rounds; ++r) {
    if (hook) {
      if (auto replaced = hook(r, current)) {
        auto touched = changed_slots(current.graph, replaced->graph);
        if (!touched.empty() || !(replaced->position == current.position) ||
            !(replaced->banned == current.banned)) {
          current_id = tree.commit(current_id, *replaced, touched, Application{"<reload>", {}, touched}, std::nullopt);
        }
        current = std::move(*replaced);
      }
    }
    auto outcome = run_once(program, current, current_id, library, rng, options, tree, used);
    // Continue from the committed state so resumed sessions behave the same.
    current_id = outcome.state_id;
    current = outcome.log.empty() ? outcome.state : tree.state(current_id);
    bool stop = outcome.log.empty() || outcome.status == RunStatus::aborted;
    rounds.push_back(std::move(outcome));
    if (stop) break;
  }
  return rounds;
}

}  // namespace porgysim
