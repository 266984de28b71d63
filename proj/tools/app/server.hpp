#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "api.hpp"

namespace porgysim::app {

/// HTTP + WebSocket front end for ApiService. Upgrades on
/// /sessions/{id}/events subscribe the socket to that session's events.
class Server {
 public:
  Server(ApiService& service, const std::string& host, std::uint16_t port, int threads = 2);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Starts accepting on background threads.
  void start();
  void stop();
  /// Blocks until stop() is called from another thread or a signal arrives.
  void wait();

  /// Actual bound port (useful when constructed with port 0).
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Splits "host:port"; a bare port binds 127.0.0.1.
std::pair<std::string, std::uint16_t> parse_address(const std::string& addr);

}  // namespace porgysim::app
