#include "fluidc/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <regex>
#include <thread>
#include <vector>

#include "fluidc/api.hpp"
#include "fluidc/error.hpp"

namespace fluidc {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, std::shared_ptr<Session> session,
            std::chrono::milliseconds heartbeat)
      : ws_(std::move(socket)),
        session_(std::move(session)),
        heartbeat_(ws_.get_executor()),
        heartbeat_interval_(heartbeat) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
  }

  // Both may be called from any thread; work is moved onto the stream's strand.
  void send(std::string frame) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), f = std::move(frame)]() mutable {
      if (self->closing_) return;
      self->queue_.push_back(std::move(f));
      if (self->queue_.size() == 1) self->write_next();
    });
  }

  void close(int code, std::string reason) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), code, r = std::move(reason)] {
      if (self->closing_) return;
      self->closing_ = true;
      self->close_reason_ = websocket::close_reason(static_cast<websocket::close_code>(code), r);
      if (self->queue_.empty()) self->do_close();
    });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    std::weak_ptr<WsSession> weak = shared_from_this();
    token_ = session_->subscribe(
        {[weak](const json& frame) {
           if (auto s = weak.lock()) s->send(frame.dump());
         },
         [weak](int code, const std::string& reason) {
           if (auto s = weak.lock()) s->close(code, reason);
         }});
    subscribed_ = true;
    arm_heartbeat();
    read_next();
  }

  void arm_heartbeat() {
    heartbeat_.expires_after(heartbeat_interval_);
    heartbeat_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      self->send(json{{"type", "heartbeat"}, {"session", self->session_->id()}}.dump());
      self->arm_heartbeat();
    });
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      finish();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    try {
      const json msg = json::parse(text);
      if (msg.contains("set")) {
        const auto& s = msg["set"];
        session_->set_input(s.at("net").get<std::string>(), s.at("v").get<int>());
      } else if (msg.contains("step")) {
        const auto& s = msg["step"];
        session_->step(s.is_object() ? s.value("dt", session_->dt()) : session_->dt());
      } else {
        throw Error(ErrorCode::BadRequest, "expected {\"set\":{\"net\",\"v\"}}");
      }
    } catch (const Error& e) {
      send(json{{"type", "error"}, {"code", to_string(e.code())}, {"message", e.what()}}.dump());
    } catch (const std::exception& e) {
      send(json{{"type", "error"}, {"code", "BadRequest"}, {"message", e.what()}}.dump());
    }
    read_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      if (ec) {
                        self->queue_.clear();
                        self->finish();
                        return;
                      }
                      if (!self->queue_.empty()) {
                        self->write_next();
                      } else if (self->closing_) {
                        self->do_close();
                      }
                    });
  }

  void do_close() {
    if (close_sent_) return;
    close_sent_ = true;
    heartbeat_.cancel();
    ws_.async_close(close_reason_, [self = shared_from_this()](beast::error_code) { self->finish(); });
  }

  void finish() {
    heartbeat_.cancel();
    if (subscribed_) {
      subscribed_ = false;
      session_->unsubscribe(token_);
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<Session> session_;
  asio::steady_timer heartbeat_;
  std::chrono::milliseconds heartbeat_interval_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool closing_ = false;
  bool close_sent_ = false;
  bool subscribed_ = false;
  int token_ = -1;
  websocket::close_reason close_reason_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Api& api, SessionManager& sessions,
              std::chrono::milliseconds heartbeat)
      : stream_(std::move(socket)), api_(api), sessions_(sessions), heartbeat_(heartbeat) {}

  void run() {
    asio::dispatch(stream_.get_executor(),
                   beast::bind_front_handler(&HttpSession::read_next, shared_from_this()));
  }

 private:
  void read_next() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    std::string target(req_.target());
    const auto q = target.find('?');
    if (q != std::string::npos) target.resize(q);

    if (websocket::is_upgrade(req_)) {
      static const std::regex ws_re(R"(^/api/sessions/([^/]+)/ws$)");
      std::smatch m;
      ApiResponse failure;
      if (std::regex_match(target, m, ws_re)) {
        try {
          auto session = sessions_.get(m[1].str());
          stream_.expires_never();
          std::make_shared<WsSession>(stream_.release_socket(), std::move(session), heartbeat_)
              ->run(std::move(req_));
          return;
        } catch (const Error& e) {
          failure = error_response(e);
        }
      } else {
        failure = error_response(404, "NotFound", target + " does not accept WebSocket upgrades");
      }
      write(failure, false);
      return;
    }

    ApiRequest request{std::string(req_.method_string()), target, req_.body()};
    write(api_.handle(request), req_.keep_alive());
  }

  void write(const ApiResponse& r, bool keep_alive) {
    auto res = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(r.status), req_.version());
    res->set(http::field::server, "fluidc");
    res->set(http::field::content_type, r.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(keep_alive);
    res->body() = r.body;
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res, keep_alive](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (keep_alive) {
                          self->read_next();
                        } else {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                        }
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Api& api_;
  SessionManager& sessions_;
  std::chrono::milliseconds heartbeat_;
};

}  // namespace

struct Server::Impl {
  explicit Impl(ServerConfig c)
      : config(std::move(c)),
        sessions(config.session_ttl),
        projects(config.projects_dir),
        api(sessions, projects),
        ioc(std::max(1, config.threads)),
        acceptor(ioc),
        sweeper(ioc),
        ticker(ioc) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) return;
      } else {
        std::make_shared<HttpSession>(std::move(socket), api, sessions, config.heartbeat)->run();
      }
      accept();
    });
  }

  void sweep() {
    sweeper.expires_after(config.sweep_interval);
    sweeper.async_wait([this](beast::error_code ec) {
      if (ec) return;
      for (const auto& id : sessions.expire()) last_tick.erase(id);
      sweep();
    });
  }

  // Real-time stepping for sessions created with "autorun".
  void tick() {
    ticker.expires_after(std::chrono::milliseconds(10));
    ticker.async_wait([this](beast::error_code ec) {
      if (ec) return;
      const auto now = std::chrono::steady_clock::now();
      for (const auto& s : sessions.all()) {
        if (!s->autorun()) continue;
        auto [it, fresh] = last_tick.try_emplace(s->id(), now);
        if (fresh) continue;
        const auto dt = std::chrono::duration<double>(s->dt());
        try {
          while (now - it->second >= dt) {
            s->step(s->dt());
            it->second += std::chrono::duration_cast<std::chrono::steady_clock::duration>(dt);
          }
        } catch (const Error& e) {
          std::cerr << "fluidc: autorun stopped for " << s->id() << ": " << e.what() << "\n";
          sessions.remove(s->id());
        }
      }
      tick();
    });
  }

  ServerConfig config;
  SessionManager sessions;
  ProjectStore projects;
  Api api;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::steady_timer sweeper;
  asio::steady_timer ticker;
  std::map<std::string, std::chrono::steady_clock::time_point> last_tick;  // ticker-only
  std::vector<std::thread> threads;
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() { stop(); }

unsigned short Server::start() {
  auto& i = *impl_;
  const tcp::endpoint endpoint(asio::ip::make_address(i.config.host), i.config.port);
  i.acceptor.open(endpoint.protocol());
  i.acceptor.set_option(asio::socket_base::reuse_address(true));
  i.acceptor.bind(endpoint);
  i.acceptor.listen(asio::socket_base::max_listen_connections);
  i.accept();
  asio::post(i.sweeper.get_executor(), [&i] { i.sweep(); });
  asio::post(i.ticker.get_executor(), [&i] { i.tick(); });
  for (int k = 0; k < std::max(1, i.config.threads); ++k) {
    i.threads.emplace_back([&i] { i.ioc.run(); });
  }
  return port();
}

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void Server::stop() {
  auto& i = *impl_;
  {
    std::lock_guard lock(i.mutex);
    if (i.stopped && i.threads.empty()) return;
    i.stopped = true;
  }
  i.stopped_cv.notify_all();
  for (const auto& s : i.sessions.all()) i.sessions.remove(s->id());
  asio::post(i.ioc, [&i] {
    beast::error_code ec;
    i.acceptor.close(ec);
    i.sweeper.cancel();
    i.ticker.cancel();
  });
  // Give pending close frames a moment before tearing down the loop.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  i.ioc.stop();
  for (auto& t : i.threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  i.threads.clear();
}

unsigned short Server::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

SessionManager& Server::sessions() { return impl_->sessions; }
ProjectStore& Server::projects() { return impl_->projects; }

}  // namespace fluidc
