#include "lastmeter/server.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast.hpp>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      const auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
      };
      const int hi = hex(s[i + 1]);
      const int lo = hex(s[i + 2]);
      if (hi < 0 || lo < 0) {
        out += s[i];
        continue;
      }
      out += static_cast<char>(hi * 16 + lo);
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string path_of(const std::string& target) { return target.substr(0, target.find('?')); }

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownPoi:
      return 404;
    case ErrorCode::NotAuthor:
      return 403;
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyText:
    case ErrorCode::BadAnchor:
      return 400;
    default:
      return 500;
  }
}

HttpResult error_result(int status, const std::string& code, const std::string& message) {
  return {status, {{"error", code}, {"message", message}}};
}

// Picks the POI an /annotations request refers to.
std::shared_ptr<World> annotation_world(SessionHub& hub, const std::string& target) {
  const std::string poi = query_param(target, "poi");
  if (!poi.empty()) {
    auto w = hub.world(poi);
    if (!w) throw Error(ErrorCode::UnknownPoi, "unknown POI '" + poi + "'");
    return w;
  }
  const auto ids = hub.poi_ids();
  if (ids.size() != 1) throw Error(ErrorCode::InvalidArgument, "poi parameter required");
  return hub.world(ids.front());
}

// Logical clock for REST writes: one second past the newest record.
double next_stamp(const AnnotationStore& store) {
  double t = 0.0;
  for (const Annotation& a : store.all()) t = std::max({t, a.created_at, a.updated_at});
  return std::floor(t) + 1.0;
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorCode::SchemaError, std::string("$.") + key + ": missing field");
  }
  return body[key].get<std::string>();
}

json parse_body(const std::string& body) {
  try {
    json j = json::parse(body.empty() ? "{}" : body);
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "$: expected object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what());
  }
}

HttpResult rest_annotations(SessionHub& hub, const std::string& method, const std::string& target,
                            const std::string& id, const std::string& body) {
  auto world = annotation_world(hub, target);
  AnnotationStore& store = world->store;
  if (id.empty()) {
    if (method == "GET") {
      AnnotationFilter f;
      if (auto c = query_param(target, "category"); !c.empty()) {
        f.category = category_from_string(c);
        if (!f.category) throw Error(ErrorCode::InvalidArgument, "unknown category '" + c + "'");
      }
      if (auto a = query_param(target, "author"); !a.empty()) f.author_id = a;
      if (auto t = query_param(target, "text"); !t.empty()) f.text_contains = t;
      json items = json::array();
      for (const Annotation& a : store.query(f)) items.push_back(to_json(a));
      return {200, {{"annotations", items}, {"count", items.size()}, {"poi", world->graph.poi_id}}};
    }
    if (method == "POST") {
      const json b = parse_body(body);
      const std::string author = require_string(b, "author");
      const std::string text = require_string(b, "text");
      if (!b.contains("anchor") || !b["anchor"].is_object()) {
        throw Error(ErrorCode::SchemaError, "$.anchor: missing field");
      }
      const json& an = b["anchor"];
      AnnotationAnchor anchor;
      if (an.contains("object") && an["object"].is_string()) {
        anchor = AnnotationAnchor::on(an["object"].get<std::string>());
      } else if (an.contains("point") && an["point"].is_array() && an["point"].size() == 2 &&
                 an["point"][0].is_number() && an["point"][1].is_number()) {
        anchor = AnnotationAnchor::at({an["point"][0].get<double>(), an["point"][1].get<double>()});
      } else {
        throw Error(ErrorCode::SchemaError, "$.anchor: expected {\"point\":[x,y]} or {\"object\":id}");
      }
      std::optional<Category> category;
      if (b.contains("category")) {
        if (!b["category"].is_string()) throw Error(ErrorCode::SchemaError, "$.category: expected string");
        category = category_from_string(b["category"].get<std::string>());
        if (!category) throw Error(ErrorCode::SchemaError, "$.category: unknown category");
      }
      const Annotation a = store.create(author, text, anchor, category, next_stamp(store));
      return {201, to_json(a)};
    }
    return error_result(405, "MethodNotAllowed", method + " not allowed on /annotations");
  }
  if (method == "GET") {
    auto a = store.get(id);
    if (!a) throw Error(ErrorCode::NotFound, "annotation '" + id + "' not found");
    return {200, to_json(*a)};
  }
  if (method == "PATCH") {
    const json b = parse_body(body);
    const Annotation a =
        store.edit(id, require_string(b, "author"), require_string(b, "text"), next_stamp(store));
    return {200, to_json(a)};
  }
  if (method == "DELETE") {
    std::string author = query_param(target, "author");
    if (author.empty()) author = require_string(parse_body(body), "author");
    store.remove(id, author);
    return {200, {{"deleted", id}}};
  }
  return error_result(405, "MethodNotAllowed", method + " not allowed on /annotations/{id}");
}

}  // namespace

std::string query_param(const std::string& target, const std::string& key) {
  const auto q = target.find('?');
  if (q == std::string::npos) return {};
  std::string_view rest(target);
  rest.remove_prefix(q + 1);
  while (!rest.empty()) {
    const auto amp = rest.find('&');
    const std::string_view pair = rest.substr(0, amp);
    const auto eq = pair.find('=');
    if (percent_decode(pair.substr(0, eq)) == key) {
      return eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1));
    }
    if (amp == std::string_view::npos) break;
    rest.remove_prefix(amp + 1);
  }
  return {};
}

HttpResult handle_rest(SessionHub& hub, const std::string& method, const std::string& target,
                       const std::string& body) {
  const std::string path = path_of(target);
  try {
    if (path == "/pois") {
      if (method != "GET") return error_result(405, "MethodNotAllowed", method + " not allowed");
      json pois = json::array();
      for (const std::string& id : hub.poi_ids()) {
        auto w = hub.world(id);
        const auto [lo, hi] = w->graph.bounds();
        pois.push_back({{"poi_id", id},
                        {"anchor", {{"lat", w->graph.anchor.origin_lat}, {"lon", w->graph.anchor.origin_lon}}},
                        {"bounds", {{lo.x, lo.y}, {hi.x, hi.y}}},
                        {"object_count", w->graph.objects.size()},
                        {"annotation_count", w->store.size()}});
      }
      return {200, {{"pois", pois}}};
    }
    if (path.rfind("/pois/", 0) == 0) {
      if (method != "GET") return error_result(405, "MethodNotAllowed", method + " not allowed");
      const std::string id = percent_decode(path.substr(6));
      auto w = hub.world(id);
      if (!w) throw Error(ErrorCode::UnknownPoi, "unknown POI '" + id + "'");
      json doc = to_json(w->graph);
      const Pose s = hub.spawn(id);
      doc["spawn"] = {{"x", s.position.x}, {"y", s.position.y}, {"heading", s.heading_deg}};
      return {200, doc};
    }
    if (path == "/annotations") return rest_annotations(hub, method, target, "", body);
    if (path.rfind("/annotations/", 0) == 0) {
      const std::string id = percent_decode(path.substr(13));
      if (id.empty()) throw Error(ErrorCode::NotFound, "missing annotation id");
      return rest_annotations(hub, method, target, id, body);
    }
    return error_result(404, "NotFound", "no route for " + path);
  } catch (const Error& e) {
    return error_result(status_for(e.code()), std::string(to_string(e.code())), e.what());
  } catch (const json::exception& e) {
    return error_result(400, "SchemaError", e.what());
  }
}

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, std::shared_ptr<SessionHub> hub)
      : ws_(std::move(socket)), hub_(std::move(hub)) {}

  void run(http::request<http::string_body> req) {
    std::vector<json> greeting;
    try {
      const std::string target(req.target());
      std::string user = query_param(target, "user_id");
      if (user.empty()) user = "guest";
      session_ = hub_->create_session(query_param(target, "poi"), user);
      greeting = session_->open();
    } catch (const Error& e) {
      greeting = {{{"type", "error"},
                   {"kind", std::string(to_string(e.code()))},
                   {"message", e.what()},
                   {"v", kWireVersion},
                   {"seq", 1}}};
      close_after_ = true;
    }
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this(), greeting](beast::error_code ec) {
      if (ec) return;
      for (const json& m : greeting) self->send(m.dump());
      if (!self->close_after_) self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      const std::string frame = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      for (const json& m : self->session_->handle_text(frame)) self->send(m.dump());
      self->read();
    });
  }

  void send(std::string text) {
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return;
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) {
                        self->write_next();
                      } else if (self->close_after_) {
                        self->ws_.async_close(websocket::close_code::policy_error,
                                              [self](beast::error_code) {});
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<SessionHub> hub_;
  std::unique_ptr<Session> session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  bool close_after_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, std::shared_ptr<SessionHub> hub)
      : stream_(std::move(socket)), hub_(std::move(hub)) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_) && path_of(std::string(req_.target())) == "/ws") {
      std::make_shared<WsConnection>(stream_.release_socket(), hub_)->run(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "lastmeter");
    res->set(http::field::access_control_allow_origin, "*");
    if (req_.method() == http::verb::options) {
      res->result(http::status::no_content);
      res->set(http::field::access_control_allow_methods, "GET, POST, PATCH, DELETE, OPTIONS");
      res->set(http::field::access_control_allow_headers, "Content-Type");
    } else {
      const HttpResult r = handle_rest(*hub_, std::string(req_.method_string()),
                                       std::string(req_.target()), req_.body());
      res->result(static_cast<http::status>(r.status));
      res->set(http::field::content_type, "application/json");
      res->body() = r.body.dump();
    }
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (res->need_eof()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  std::shared_ptr<SessionHub> hub_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace

struct Server::Impl {
  std::shared_ptr<SessionHub> hub;
  ServerOptions options;
  net::io_context ioc{1};
  std::optional<tcp::acceptor> acceptor;
  std::thread thread;
  unsigned short port = 0;
  std::mutex mu;
  std::condition_variable cv;
  bool running = false;

  void accept() {
    acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), hub)->run();
      accept();
    });
  }
};

Server::Server(std::shared_ptr<SessionHub> hub, ServerOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->hub = std::move(hub);
  impl_->options = std::move(options);
}

Server::~Server() { stop(); }

void Server::start() {
  std::lock_guard lock(impl_->mu);
  if (impl_->running) return;
  const auto address = net::ip::make_address(impl_->options.host);
  impl_->acceptor.emplace(impl_->ioc);
  const tcp::endpoint ep(address, impl_->options.port);
  impl_->acceptor->open(ep.protocol());
  impl_->acceptor->set_option(net::socket_base::reuse_address(true));
  impl_->acceptor->bind(ep);
  impl_->acceptor->listen(net::socket_base::max_listen_connections);
  impl_->port = impl_->acceptor->local_endpoint().port();
  impl_->accept();
  impl_->running = true;
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (!impl_->running) return;
    impl_->running = false;
  }
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->acceptor.reset();
  impl_->cv.notify_all();
}

void Server::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [this] { return !impl_->running; });
}

unsigned short Server::bound_port() const { return impl_->port; }

}  // namespace lastmeter
