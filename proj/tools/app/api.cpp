#include "api.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>

#include <fmt/format.h>

#include <porgysim/error.hpp>
#include <porgysim/netgen.hpp>
#include <porgysim/rule_io.hpp>

namespace porgysim::app {

// --- events ------------------------------------------------------------------

std::uint64_t EventHub::subscribe(const std::string& session, Sink sink) {
  std::lock_guard lock(mutex_);
  auto token = next_++;
  sinks_.emplace(token, Entry{session, std::move(sink)});
  return token;
}

void EventHub::unsubscribe(std::uint64_t token) {
  std::lock_guard lock(mutex_);
  sinks_.erase(token);
}

void EventHub::publish(const std::string& session, const std::string& type, const ojson& payload) {
  ojson msg{{"type", type}, {"payload", payload}};
  auto text = msg.dump();
  std::vector<Sink> targets;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [_, e] : sinks_) {
      if (e.session == session) targets.push_back(e.sink);
    }
  }
  for (const auto& sink : targets) sink(text);
}

std::size_t EventHub::subscribers(const std::string& session) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, e] : sinks_) n += e.session == session;
  return n;
}

// --- helpers -----------------------------------------------------------------

namespace {

bool safe_id(const std::string& id) {
  return !id.empty() && id.size() <= 64 &&
         std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
}

HttpResponse json_response(int status, const ojson& body) { return HttpResponse{status, body.dump(), "application/json"}; }

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
  return json_response(status, ojson{{"error", code}, {"message", message}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_state:
    case ErrorCode::unknown_element: return 404;
    case ErrorCode::rewrite_error:
    case ErrorCode::budget_exceeded: return 422;
    case ErrorCode::io_error: return 500;
    default: return 400;
  }
}

HttpResponse from_error(const Error& e) {
  ojson body{{"error", to_string(e.code())}, {"message", e.what()}};
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) {
    body["line"] = pe->line();
    body["column"] = pe->column();
  }
  return json_response(status_for(e.code()), body);
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    auto s = i;
    while (i < path.size() && path[i] != '/') ++i;
    if (i > s) out.emplace_back(path.substr(s, i - s));
  }
  return out;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i < q.size()) {
    auto amp = q.find('&', i);
    if (amp == std::string_view::npos) amp = q.size();
    auto kv = q.substr(i, amp - i);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos) out.emplace(std::string(kv), "");
    else out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    i = amp + 1;
  }
  return out;
}

std::optional<std::uint64_t> to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

ojson ids_json(const std::vector<ElementId>& ids) {
  auto a = ojson::array();
  for (auto id : ids) a.push_back(raw(id));
  return a;
}

ojson parse_body(const std::string& body) {
  if (body.empty()) return ojson::object();
  auto doc = parse_json_text(body);
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "request body must be a JSON object");
  return doc;
}

ojson state_info_json(const StateInfo& info, const std::map<std::size_t, std::size_t>& step_of) {
  ojson j;
  j["id"] = raw(info.id);
  j["parent"] = info.parent ? ojson(raw(*info.parent)) : ojson(nullptr);
  j["depth"] = info.depth;
  j["step"] = info.group ? ojson(step_of.at(*info.group)) : ojson(nullptr);
  j["rule"] = info.application ? ojson(info.application->rule) : ojson(nullptr);
  if (info.application) j["image"] = ids_json(info.application->image);
  auto children = ojson::array();
  for (auto c : info.children) children.push_back(raw(c));
  j["children"] = std::move(children);
  return j;
}

ojson applied_payload(const std::string& rule, StateId parent, StateId child, const std::vector<ElementId>& image,
                      std::size_t step) {
  return ojson{{"rule", rule}, {"parent", raw(parent)}, {"child", raw(child)}, {"image", ids_json(image)}, {"step", step}};
}

Filter parse_filter(const std::string& text) {
  try {
    auto program = parse_strategy("setPos(" + text + ")");
    if (program.instructions.size() != 1) throw Error(ErrorCode::parse_error, "expected a single filter");
    return program.instructions[0].filter;
  } catch (const ParseError& e) {
    // Report positions relative to the filter text.
    std::string msg = e.what();
    auto paren = msg.find(": ");
    if (paren != std::string::npos) msg = msg.substr(paren + 2);
    auto offset = e.offset() >= 7 ? e.offset() - 7 : 0;
    auto [line, col] = line_column(text, std::min(offset, text.size()));
    throw ParseError(msg.substr(0, msg.rfind(" (offset")), line, col, offset);
  }
}

}  // namespace

// --- service -----------------------------------------------------------------

ApiService::ApiService(std::optional<std::string> persist_dir) : persist_dir_(std::move(persist_dir)) {
  if (persist_dir_) std::filesystem::create_directories(*persist_dir_);
}

bool ApiService::is_event_channel(const std::string& target, std::string& session_id) {
  auto path = target.substr(0, target.find('?'));
  auto parts = split_path(path);
  if (parts.size() == 3 && parts[0] == "sessions" && parts[2] == "events") {
    session_id = parts[1];
    return true;
  }
  return false;
}

std::shared_ptr<Session> ApiService::session(const std::string& id) { return find(id); }

std::shared_ptr<Session> ApiService::find(const std::string& id) {
  {
    std::shared_lock lock(sessions_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
  }
  if (!persist_dir_ || !safe_id(id)) return nullptr;
  auto file = std::filesystem::path(*persist_dir_) / (id + ".json");
  if (!std::filesystem::exists(file)) return nullptr;
  std::shared_ptr<Session> loaded = load_session(file.string());
  std::unique_lock lock(sessions_mutex_);
  auto [it, _] = sessions_.emplace(id, loaded);
  return it->second;
}

void ApiService::persist(const Session& s) {
  if (!persist_dir_) return;
  save_session(s, (std::filesystem::path(*persist_dir_) / (s.id + ".json")).string());
}

HttpResponse ApiService::create(const ojson& body) {
  SessionSpec spec;
  if (body.contains("graph")) {
    spec.graph = graph_from_json(body["graph"]);
  } else if (body.contains("edges")) {
    spec.graph = import_edge_list(body["edges"].get<std::string>());
  } else if (body.contains("generate")) {
    const auto& g = body["generate"];
    GeneratorConfig gc;
    gc.node_count = g.value("nodes", gc.node_count);
    gc.edges_per_new_node = g.value("m", gc.edges_per_new_node);
    gc.triad_closure = g.value("triad", gc.triad_closure);
    gc.seed = g.value("seed", gc.seed);
    gc.attachment = g.value("attachment", std::string("preferential")) == "uniform" ? Attachment::uniform
                                                                                    : Attachment::preferential;
    spec.graph = generate(gc);
  } else {
    throw Error(ErrorCode::config_error, "session needs one of 'graph', 'edges' or 'generate'");
  }

  ojson cfg = body.value("config", ojson::object());
  // Flat keys override the nested config document.
  if (body.contains("model")) cfg["model"]["type"] = body["model"];
  if (body.contains("seeds")) cfg["model"]["seeds"] = body["seeds"];
  if (body.contains("mode")) cfg["model"]["mode"] = body["mode"];
  if (body.contains("strict_sigma")) cfg["model"]["strict_sigma"] = body["strict_sigma"];
  if (body.contains("max_rounds")) cfg["model"]["max_rounds"] = body["max_rounds"];
  if (body.contains("p")) cfg["init"]["p"] = body["p"];
  if (body.contains("theta")) cfg["init"]["theta"] = body["theta"];
  if (body.contains("rng")) cfg["rng"]["seed"] = body["rng"];
  spec.config = model_config_from_json(cfg);
  if (body.contains("strategy")) spec.strategy_text = body["strategy"].get<std::string>();
  for (const auto& r : body.value("rules", ojson::array())) spec.rules.push_back(rule_from_json(r));
  spec.tree_options.keep_intermediate = body.value("keep_intermediate", true);

  auto id = body.contains("id") ? body["id"].get<std::string>() : fmt::format("s{}", next_id_++);
  if (!safe_id(id)) throw Error(ErrorCode::config_error, "session id must be 1-64 of [A-Za-z0-9_-]");
  std::shared_ptr<Session> s = create_session(id, std::move(spec));
  const auto& root = s->tree->state(s->tree->root());
  {
    std::unique_lock lock(sessions_mutex_);
    if (sessions_.count(id)) return error_response(409, "conflict", fmt::format("session '{}' exists", id));
    sessions_.emplace(id, s);
  }
  persist(*s);
  return json_response(201, ojson{{"id", id},
                                  {"model", to_string(s->config.model)},
                                  {"root", raw(s->tree->root())},
                                  {"cursor", raw(s->cursor)},
                                  {"nodes", root.graph.node_count()},
                                  {"edges", root.graph.edge_count()}});
}

HttpResponse ApiService::handle(const HttpRequest& request) {
  try {
    auto q = request.target.find('?');
    auto path = request.target.substr(0, q);
    auto query = parse_query(q == std::string::npos ? std::string_view() : std::string_view(request.target).substr(q + 1));
    auto parts = split_path(path);
    const auto& method = request.method;

    if (parts.size() == 2 && parts[0] == "validate" && parts[1] == "strategy" && method == "POST") {
      auto body = parse_body(request.body);
      auto program = parse_strategy(body.value("text", std::string()));
      ojson out{{"ok", true}};
      auto printed = ojson::array();
      for (const auto& ins : program.instructions) printed.push_back(print_instruction(ins));
      out["instructions"] = std::move(printed);
      if (body.contains("model")) {
        auto model = model_from_string(body["model"].get<std::string>());
        if (!model) throw Error(ErrorCode::config_error, "unknown model");
        check_rules(program, build_rules(*model));
      }
      return json_response(200, out);
    }

    if (parts.empty() || parts[0] != "sessions") return error_response(404, "not_found", "no such endpoint");

    if (parts.size() == 1) {
      if (method == "POST") return create(parse_body(request.body));
      if (method == "GET") {
        std::shared_lock lock(sessions_mutex_);
        auto ids = ojson::array();
        for (const auto& [id, _] : sessions_) ids.push_back(id);
        return json_response(200, ojson{{"sessions", ids}});
      }
      return error_response(405, "method_not_allowed", method);
    }

    auto s = find(parts[1]);
    if (!s) return error_response(404, "unknown_session", fmt::format("no session '{}'", parts[1]));
    auto& tree = *s->tree;
    std::string action = parts.size() > 2 ? parts[2] : "";

    auto mutate = [&](auto&& body_fn) -> HttpResponse {
      std::unique_lock lock(s->mutation, std::try_to_lock);
      if (!lock.owns_lock()) {
        return error_response(409, "conflict", "another mutation of this session is in progress");
      }
      auto response = body_fn();
      persist(*s);
      return response;
    };

    if (parts.size() == 2 && method == "GET") {
      return json_response(200, ojson{{"id", s->id},
                                      {"model", to_string(s->config.model)},
                                      {"cursor", raw(s->cursor)},
                                      {"states", tree.size()},
                                      {"strategy", s->strategy_text},
                                      {"rules", s->rules.names()}});
    }

    if (action == "rounds" && method == "POST" && parts.size() == 3) {
      auto body = parse_body(request.body);
      auto rounds = body.value("rounds", std::size_t{1});
      return mutate([&] {
        auto outcomes = advance(*s, rounds);
        std::map<std::size_t, std::size_t> step_of;
        for (const auto& g : tree.groups()) step_of[g.id] = g.step;
        auto list = ojson::array();
        for (const auto& o : outcomes) {
          std::size_t step = o.group ? step_of[*o.group] : 0;
          for (const auto& a : o.log) {
            events_.publish(s->id, "applied", applied_payload(a.rule, a.parent, a.child, a.image, step));
          }
          ojson r{{"step", o.group ? ojson(step) : ojson(nullptr)},
                  {"applications", o.log.size()},
                  {"status", to_string(o.status)},
                  {"state", raw(o.state_id)}};
          if (!o.error.empty()) r["error"] = o.error;
          list.push_back(std::move(r));
        }
        return json_response(200, ojson{{"cursor", raw(s->cursor)}, {"rounds", list}});
      });
    }

    if (action == "apply" && method == "POST" && parts.size() == 3) {
      auto body = parse_body(request.body);
      auto rule = body.at("rule").get<std::string>();
      std::vector<ElementId> host;
      if (body.contains("match") && body["match"].is_array()) {
        for (const auto& v : body["match"]) host.push_back(ElementId{v.get<std::uint64_t>()});
      } else if (body.contains("match") && body["match"] != "random") {
        throw Error(ErrorCode::parse_error, "match must be an id array or \"random\"");
      }
      return mutate([&] {
        auto a = apply_once(*s, rule, host);
        auto payload = applied_payload(rule, a.parent, a.child, a.image, a.step);
        events_.publish(s->id, "applied", payload);
        return json_response(200, payload);
      });
    }

    if (action == "setpos" && method == "POST" && parts.size() == 3) {
      auto body = parse_body(request.body);
      return mutate([&] {
        auto state = tree.state(s->cursor);
        std::vector<ElementId> ids;
        if (body.contains("ids")) {
          for (const auto& v : body["ids"]) ids.push_back(ElementId{v.get<std::uint64_t>()});
          ids = set_position(state, ids).position.ids();
        } else {
          ids = evaluate_filter(parse_filter(body.at("filter").get<std::string>()), state.graph);
        }
        s->position_override = ElementSet(ids);
        return json_response(200, ojson{{"cursor", raw(s->cursor)}, {"position", ids_json(ids)}});
      });
    }

    if (action == "tree" && method == "GET" && parts.size() == 3) {
      std::map<std::size_t, std::size_t> step_of;
      auto groups = ojson::array();
      for (const auto& g : tree.groups()) {
        step_of[g.id] = g.step;
        auto members = ojson::array();
        for (auto m : g.states) members.push_back(raw(m));
        groups.push_back(
            {{"id", g.id}, {"step", g.step}, {"start", raw(g.start)}, {"states", members}, {"complete", g.complete}});
      }
      auto states = ojson::array();
      for (auto id : tree.state_ids()) states.push_back(state_info_json(tree.info(id), step_of));
      auto leaves = ojson::array();
      for (auto l : tree.leaves()) leaves.push_back(raw(l));
      return json_response(200, ojson{{"root", raw(tree.root())},
                                      {"cursor", raw(s->cursor)},
                                      {"states", states},
                                      {"groups", groups},
                                      {"leaves", leaves}});
    }

    if (action == "states" && method == "GET" && parts.size() == 4) {
      auto sid = to_u64(parts[3]);
      if (!sid || !tree.contains(StateId{*sid})) return error_response(404, "unknown_state", "no such state");
      return json_response(200, ojson{{"id", *sid}, {"graph", located_to_json(tree.state(StateId{*sid}))}});
    }

    if (action == "metrics" && method == "GET" && parts.size() == 3) {
      StateId leaf = s->cursor;
      if (auto it = query.find("leaf"); it != query.end() && !it->second.empty()) {
        auto v = to_u64(it->second);
        if (!v || !tree.contains(StateId{*v})) return error_response(404, "unknown_state", "no such leaf");
        leaf = StateId{*v};
      }
      auto series = compute_metrics(tree, leaf, to_string(s->config.model));
      auto rows = ojson::array();
      for (const auto& r : series.rows) {
        rows.push_back({{"step", r.step},
                        {"state", raw(r.state)},
                        {"active", r.active},
                        {"visited", r.visited},
                        {"efficiency", r.efficiency ? ojson(*r.efficiency) : ojson(nullptr)}});
      }
      return json_response(200, ojson{{"leaf", raw(leaf)}, {"model", series.model}, {"rows", rows}});
    }

    if (action == "trace" && method == "GET" && parts.size() == 4) {
      auto eid = to_u64(parts[3]);
      if (!eid) return error_response(404, "unknown_element", "bad element id");
      auto entries = ojson::array();
      for (const auto& e : tree.trace_element(ElementId{*eid})) {
        entries.push_back({{"state", raw(e.state)}, {"changed", e.changed}, {"properties", record_to_json(e.record)}});
      }
      return json_response(200, ojson{{"element", *eid}, {"entries", entries}});
    }

    if (action == "branch" && method == "POST" && parts.size() == 3) {
      auto body = parse_body(request.body);
      auto sid = StateId{body.at("state").get<std::uint64_t>()};
      if (!tree.contains(sid)) return error_response(404, "unknown_state", "no such state");
      return mutate([&] {
        s->cursor = sid;
        s->position_override.reset();
        events_.publish(s->id, "branch", ojson{{"state", raw(sid)}});
        return json_response(200, ojson{{"cursor", raw(sid)}});
      });
    }

    if (action == "selection" && method == "POST" && parts.size() == 3) {
      auto body = parse_body(request.body);
      auto elements = body.value("elements", ojson::array());
      events_.publish(s->id, "selection", ojson{{"elements", elements}});
      return json_response(200, ojson{{"delivered", events_.subscribers(s->id)}});
    }

    return error_response(404, "not_found", "no such endpoint");
  } catch (const Error& e) {
    return from_error(e);
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

}  // namespace porgysim::app
