#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "session.hpp"

namespace porgysim::app {

struct HttpRequest {
  std::string method;
  std::string target;  // path with optional query
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Per-session fan-out of event messages to connected subscribers.
class EventHub {
 public:
  using Sink = std::function<void(const std::string&)>;

  std::uint64_t subscribe(const std::string& session, Sink sink);
  void unsubscribe(std::uint64_t token);
  /// Sends {"type": type, "payload": payload} to every subscriber of `session`.
  void publish(const std::string& session, const std::string& type, const ojson& payload);
  std::size_t subscribers(const std::string& session) const;

 private:
  struct Entry {
    std::string session;
    Sink sink;
  };
  mutable std::mutex mutex_;
  std::map<std::uint64_t, Entry> sinks_;
  std::uint64_t next_ = 1;
};

/// Transport-independent request handler for the session API.
class ApiService {
 public:
  explicit ApiService(std::optional<std::string> persist_dir = std::nullopt);

  HttpResponse handle(const HttpRequest& request);

  EventHub& events() noexcept { return events_; }
  std::shared_ptr<Session> session(const std::string& id);

  /// True when `path` names a session event channel; sets `session_id`.
  bool is_event_channel(const std::string& path, std::string& session_id);

 private:
  HttpResponse create(const ojson& body);
  std::shared_ptr<Session> find(const std::string& id);
  void persist(const Session& s);

  std::optional<std::string> persist_dir_;
  std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<std::uint64_t> next_id_{1};
  EventHub events_;
};

}  // namespace porgysim::app
