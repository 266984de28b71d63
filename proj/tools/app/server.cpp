#include "server.hpp"

#include <deque>
#include <thread>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <porgysim/error.hpp>

namespace porgysim::app {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class WebSocketSession : public std::enable_shared_from_this<WebSocketSession> {
 public:
  WebSocketSession(tcp::socket&& socket, EventHub& hub, std::string session)
      : ws_(std::move(socket)), hub_(hub), session_(std::move(session)) {}

  ~WebSocketSession() {
    if (token_) hub_.unsubscribe(token_);
  }

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WebSocketSession::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WebSocketSession> weak = shared_from_this();
    auto executor = ws_.get_executor();
    token_ = hub_.subscribe(session_, [weak, executor](const std::string& msg) {
      net::post(executor, [weak, msg] {
        if (auto self = weak.lock()) self->send(msg);
      });
    });
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WebSocketSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      hub_.unsubscribe(token_);
      token_ = 0;
      return;
    }
    // Incoming frames are ignored; the channel is server to client.
    buffer_.consume(buffer_.size());
    do_read();
  }

  void send(const std::string& msg) {
    queue_.push_back(msg);
    if (queue_.size() > 1) return;
    do_write();
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&WebSocketSession::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    queue_.pop_front();
    if (!queue_.empty()) do_write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  EventHub& hub_;
  std::string session_;
  std::uint64_t token_ = 0;
  std::deque<std::string> queue_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, ApiService& service) : stream_(std::move(socket)), service_(service) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpSession::do_read, shared_from_this()));
  }

 private:
  void do_read() {
    req_ = {};
    parser_.emplace();
    parser_->body_limit(64 * 1024 * 1024);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    req_ = parser_->release();

    std::string session_id;
    if (websocket::is_upgrade(req_)) {
      std::string target(req_.target());
      if (service_.is_event_channel(target, session_id) && service_.session(session_id)) {
        stream_.expires_never();
        std::make_shared<WebSocketSession>(stream_.release_socket(), service_.events(), session_id)
            ->run(std::move(req_));
        return;
      }
    }

    HttpResponse out;
    if (req_.method() == http::verb::options) {
      out = HttpResponse{204, "", "text/plain"};
    } else {
      out = service_.handle(HttpRequest{std::string(req_.method_string()), std::string(req_.target()), req_.body()});
    }
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(out.status),
                                                                   req_.version());
    res->set(http::field::server, "porgysim");
    res->set(http::field::content_type, out.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_headers, "Content-Type");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res->keep_alive(req_.keep_alive());
    res->body() = std::move(out.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code wec, std::size_t) {
      if (wec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  ApiService& service_;
  std::optional<http::request_parser<http::string_body>> parser_;
  http::request<http::string_body> req_;
};

class Listener : public std::enable_shared_from_this<Listener> {
 public:
  Listener(net::io_context& ioc, const tcp::endpoint& endpoint, ApiService& service)
      : ioc_(ioc), acceptor_(net::make_strand(ioc)), service_(service) {
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen(net::socket_base::max_listen_connections);
  }

  void run() { do_accept(); }
  void close() {
    net::post(acceptor_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      self->acceptor_.close(ec);
    });
  }
  std::uint16_t port() const { return acceptor_.local_endpoint().port(); }

 private:
  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_),
                           beast::bind_front_handler(&Listener::on_accept, shared_from_this()));
  }

  void on_accept(beast::error_code ec, tcp::socket socket) {
    if (ec == net::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), service_)->run();
    do_accept();
  }

  net::io_context& ioc_;
  tcp::acceptor acceptor_;
  ApiService& service_;
};

}  // namespace

struct Server::Impl {
  net::io_context ioc;
  std::shared_ptr<Listener> listener;
  std::vector<std::thread> threads;
  int thread_count = 2;
  std::uint16_t port = 0;
};

Server::Server(ApiService& service, const std::string& host, std::uint16_t port, int threads)
    : impl_(std::make_unique<Impl>()) {
  impl_->thread_count = std::max(1, threads);
  beast::error_code ec;
  auto address = net::ip::make_address(host, ec);
  if (ec) throw Error(ErrorCode::config_error, "bad listen address '" + host + "'");
  try {
    impl_->listener = std::make_shared<Listener>(impl_->ioc, tcp::endpoint{address, port}, service);
  } catch (const boost::system::system_error& e) {
    throw Error(ErrorCode::io_error, std::string("cannot listen: ") + e.what());
  }
  impl_->port = impl_->listener->port();
}

Server::~Server() { stop(); }

void Server::start() {
  impl_->listener->run();
  for (int i = 0; i < impl_->thread_count; ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
}

void Server::stop() {
  if (!impl_ || impl_->threads.empty()) return;
  impl_->listener->close();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

void Server::wait() {
  net::signal_set signals(impl_->ioc, SIGINT, SIGTERM);
  signals.async_wait([this](beast::error_code, int) { impl_->ioc.stop(); });
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

std::uint16_t Server::port() const { return impl_->port; }

std::pair<std::string, std::uint16_t> parse_address(const std::string& addr) {
  auto colon = addr.rfind(':');
  std::string host = colon == std::string::npos ? "127.0.0.1" : addr.substr(0, colon);
  std::string port_text = colon == std::string::npos ? addr : addr.substr(colon + 1);
  if (host.empty()) host = "0.0.0.0";
  try {
    std::size_t used = 0;
    auto port = std::stoul(port_text, &used);
    if (used != port_text.size() || port > 65535) throw std::out_of_range("port");
    return {host, static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw Error(ErrorCode::config_error, "bad address '" + addr + "', expected host:port");
  }
}

}  // namespace porgysim::app
