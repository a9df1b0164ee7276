#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "lastmeter/session.hpp"

namespace lastmeter {

struct HttpResult {
  int status = 200;
  nlohmann::json body;
};

// REST surface over the hub, independent of the transport:
//   GET /pois, GET /pois/{id}
//   GET /annotations[?poi=&category=&author=&text=], GET /annotations/{id}
//   POST /annotations, PATCH /annotations/{id}, DELETE /annotations/{id}
// `target` is the raw request target including any query string.
HttpResult handle_rest(SessionHub& hub, const std::string& method, const std::string& target,
                       const std::string& body);

// Query-string parameter, percent-decoded; empty if absent.
std::string query_param(const std::string& target, const std::string& key);

struct ServerOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
};

// HTTP + WebSocket listener on one background thread. WebSocket clients
// connect to /ws?poi=<id>&user_id=<name>.
class Server {
 public:
  Server(std::shared_ptr<SessionHub> hub, ServerOptions options = {});
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();
  // Blocks until stop() is called from another thread or a signal handler.
  void wait();
  unsigned short bound_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lastmeter
