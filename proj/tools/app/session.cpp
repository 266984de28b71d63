#include "session.hpp"

#include <fmt/format.h>

#include <porgysim/error.hpp>
#include <porgysim/rule_io.hpp>

namespace porgysim::app {

namespace {

RunOptions run_options(const Session& s) {
  RunOptions o;
  o.mode = s.config.mode;
  return o;
}

void install_rules(Session& s, std::vector<RewriteRule> rules) {
  if (rules.empty()) {
    s.rules = build_rules(s.config.model);
    s.custom_rules = false;
  } else {
    for (auto& r : rules) s.rules.add(std::move(r));
    s.custom_rules = true;
  }
}

}  // namespace

std::unique_ptr<Session> create_session(std::string id, SessionSpec spec) {
  auto s = std::make_unique<Session>();
  s->id = std::move(id);
  s->config = spec.config;
  s->reload_path = spec.reload_path;
  install_rules(*s, std::move(spec.rules));
  s->strategy_text = spec.strategy_text ? *spec.strategy_text : print_strategy(model_strategy(s->config.model, s->config.strict_sigma));
  s->program = parse_strategy(s->strategy_text);
  check_rules(s->program, s->rules);
  s->rng = SeededRandom(s->config.rng_seed);
  auto located = setup_simulation(spec.graph, s->config, s->rng);
  s->tree = std::make_unique<DerivationTree>(std::move(located), spec.tree_options);
  s->cursor = s->tree->root();
  return s;
}

LocatedGraph cursor_state(const Session& session) {
  auto state = session.tree->state(session.cursor);
  if (session.position_override) state.position = *session.position_override;
  return state;
}

std::vector<StrategyOutcome> advance(Session& session, std::size_t rounds) {
  RoundHook hook;
  if (session.reload_path) hook = probability_reload_hook(*session.reload_path);
  auto outcomes = run_rounds(session.program, cursor_state(session), session.cursor, session.rules, session.rng,
                             run_options(session), *session.tree, rounds, hook);
  session.position_override.reset();
  if (!outcomes.empty()) session.cursor = outcomes.back().state_id;
  return outcomes;
}

Applied apply_once(Session& session, const std::string& rule_name, const std::vector<ElementId>& host) {
  const auto& rule = session.rules.at(rule_name);
  auto state = cursor_state(session);
  Match match;
  if (host.empty()) {
    auto matches = find_matches(rule, state, session.rng, session.config.mode);
    if (matches.empty()) throw Error(ErrorCode::rewrite_error, fmt::format("rule '{}' has no match here", rule_name));
    match = std::move(matches.front());
  } else {
    // Rebuild bindings by re-running the matcher restricted to this image.
    auto matches = find_matches(rule, state, session.rng, MatchMode::deterministic);
    auto it = std::find_if(matches.begin(), matches.end(), [&](const Match& m) { return m.host == host; });
    if (it == matches.end()) {
      throw Error(ErrorCode::rewrite_error, fmt::format("the given elements are not a match of '{}'", rule_name));
    }
    match = std::move(*it);
  }
  auto result = apply_rule(rule, match, state, session.rng);
  auto group = session.tree->open_group(session.cursor);
  auto child = session.tree->commit(session.cursor, result.state, result.touched,
                                    Application{rule.name(), match.host, result.image}, group);
  session.tree->close_group(group);
  Applied out{session.cursor, child, result.image, session.tree->group(group).step};
  session.cursor = child;
  session.position_override.reset();
  return out;
}

ojson session_to_json(const Session& s) {
  ojson doc;
  doc["id"] = s.id;
  doc["config"] = model_config_to_json(s.config);
  doc["strategy"] = s.strategy_text;
  if (s.custom_rules) {
    auto rules = ojson::array();
    for (const auto& name : s.rules.names()) rules.push_back(rule_to_json(s.rules.at(name)));
    doc["rules"] = std::move(rules);
  }
  if (s.reload_path) doc["reload"] = *s.reload_path;
  doc["rng"] = s.rng.state();
  doc["cursor"] = raw(s.cursor);
  if (s.position_override) {
    auto ids = ojson::array();
    for (auto id : *s.position_override) ids.push_back(raw(id));
    doc["position_override"] = std::move(ids);
  }
  doc["tree"] = s.tree->to_json();
  return doc;
}

std::unique_ptr<Session> session_from_json(const ojson& doc) {
  try {
    auto s = std::make_unique<Session>();
    s->id = doc.value("id", std::string("s1"));
    s->config = model_config_from_json(doc.at("config"));
    std::vector<RewriteRule> rules;
    for (const auto& r : doc.value("rules", ojson::array())) rules.push_back(rule_from_json(r));
    install_rules(*s, std::move(rules));
    s->strategy_text = doc.at("strategy").get<std::string>();
    s->program = parse_strategy(s->strategy_text);
    if (doc.contains("reload")) s->reload_path = doc["reload"].get<std::string>();
    s->rng.restore(doc.at("rng").get<std::string>());
    s->tree = DerivationTree::from_json(doc.at("tree"));
    s->cursor = StateId{doc.at("cursor").get<std::uint64_t>()};
    if (!s->tree->contains(s->cursor)) throw Error(ErrorCode::unknown_state, "session cursor names no state");
    if (doc.contains("position_override")) {
      std::vector<ElementId> ids;
      for (const auto& v : doc["position_override"]) ids.push_back(ElementId{v.get<std::uint64_t>()});
      s->position_override = ElementSet(std::move(ids));
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("malformed session document: {}", e.what()));
  }
}

void save_session(const Session& session, const std::string& path) {
  write_file(path, session_to_json(session).dump() + "\n");
}

std::unique_ptr<Session> load_session(const std::string& path) {
  return session_from_json(parse_json_text(read_file(path)));
}

}  // namespace porgysim::app
