#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "app/api.hpp"
#include "app/server.hpp"

using namespace porgysim;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

struct Live {
  app::ApiService api;
  app::Server server{api, "127.0.0.1", 0, 2};
  Live() { server.start(); }
  ~Live() { server.stop(); }
};

http::response<http::string_body> request(std::uint16_t port, http::verb verb, const std::string& target,
                                          const std::string& body = "") {
  net::io_context io;
  tcp::resolver resolver(io);
  beast::tcp_stream stream(io);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  req.set(http::field::content_type, "application/json");
  req.body() = body;
  req.prepare_payload();
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return res;
}

std::string create_star(std::uint16_t port) {
  auto res = request(port, http::verb::post, "/sessions",
                     R"({"edges": "n1 n2\nn1 n3\nn1 n4\n", "model": "ic", "seeds": ["n1"], "p": 1, "rng": 7})");
  EXPECT_EQ(res.result_int(), 201) << res.body();
  return ojson::parse(res.body())["id"].get<std::string>();
}

struct WsClient {
  net::io_context io;
  websocket::stream<tcp::socket> ws{io};

  WsClient(std::uint16_t port, const std::string& path) {
    tcp::resolver resolver(io);
    net::connect(ws.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws.handshake("127.0.0.1", path);
  }
  ojson next() {
    beast::flat_buffer buffer;
    ws.read(buffer);
    return ojson::parse(beast::buffers_to_string(buffer.data()));
  }
};

void wait_for_subscribers(app::ApiService& api, const std::string& id, std::size_t n) {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while (api.events().subscribers(id) < n && std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ASSERT_EQ(api.events().subscribers(id), n);
}

}  // namespace

TEST(Server, ParseAddress) {
  EXPECT_EQ(app::parse_address("0.0.0.0:9000"), std::make_pair(std::string("0.0.0.0"), std::uint16_t{9000}));
  EXPECT_EQ(app::parse_address("8081"), std::make_pair(std::string("127.0.0.1"), std::uint16_t{8081}));
  EXPECT_THROW(app::parse_address("host:notaport"), Error);
}

TEST(Server, HttpRoundTrip) {
  Live live;
  ASSERT_NE(live.server.port(), 0);
  auto id = create_star(live.server.port());
  auto res = request(live.server.port(), http::verb::post, "/sessions/" + id + "/rounds", R"({"rounds": 3})");
  ASSERT_EQ(res.result_int(), 200) << res.body();
  res = request(live.server.port(), http::verb::get, "/sessions/" + id + "/metrics");
  ASSERT_EQ(res.result_int(), 200);
  auto rows = ojson::parse(res.body())["rows"];
  EXPECT_EQ(rows.back()["active"], 4);
  EXPECT_EQ(res[http::field::access_control_allow_origin], "*");
  res = request(live.server.port(), http::verb::get, "/sessions/missing");
  EXPECT_EQ(res.result_int(), 404);
  EXPECT_EQ(ojson::parse(res.body())["error"], "unknown_session");
}

TEST(Server, WebSocketReceivesAppliedEvents) {
  Live live;
  auto port = live.server.port();
  auto id = create_star(port);
  WsClient client(port, "/sessions/" + id + "/events");
  wait_for_subscribers(live.api, id, 1);
  ASSERT_EQ(request(port, http::verb::post, "/sessions/" + id + "/rounds", R"({"rounds": 1})").result_int(), 200);
  for (int i = 0; i < 6; ++i) {
    auto msg = client.next();
    EXPECT_EQ(msg["type"], "applied");
    EXPECT_EQ(msg["payload"]["step"], 1);
  }
}

TEST(Server, SelectionBroadcastToEveryViewer) {
  Live live;
  auto port = live.server.port();
  auto id = create_star(port);
  WsClient a(port, "/sessions/" + id + "/events");
  WsClient b(port, "/sessions/" + id + "/events");
  wait_for_subscribers(live.api, id, 2);
  auto res = request(port, http::verb::post, "/sessions/" + id + "/selection", R"({"elements": ["n3"]})");
  ASSERT_EQ(res.result_int(), 200);
  EXPECT_EQ(ojson::parse(res.body())["delivered"], 2);
  for (auto* c : {&a, &b}) {
    auto msg = c->next();
    EXPECT_EQ(msg["type"], "selection");
    EXPECT_EQ(msg["payload"]["elements"], ojson::array({"n3"}));
  }
}

TEST(Server, UpgradeForUnknownSessionRejected) {
  Live live;
  EXPECT_THROW(WsClient(live.server.port(), "/sessions/ghost/events"), boost::system::system_error);
}
