#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lastmeter/server.hpp"
#include "test_support.hpp"
#include "ws_client.hpp"

namespace lastmeter::test {

inline constexpr const char* kGoldenUser = "golden_user";

// Fresh server over a fresh fixture world.
struct LiveServer {
  std::shared_ptr<SessionHub> hub = std::make_shared<SessionHub>();
  std::unique_ptr<Server> server;

  LiveServer() {
    hub->add_world(fixture_world());
    server = std::make_unique<Server>(hub);
    server->start();
  }
  ~LiveServer() { server->stop(); }
  unsigned short port() const { return server->bound_port(); }
};

// Scripted visit: greet, locate, navigate toward the statue, walk north until
// guidance ends or the walker is blocked, then create, edit and delete a note.
// Each record is {"step": label, "recv": message}.
inline std::vector<nlohmann::json> run_golden_flow(unsigned short port) {
  using nlohmann::json;
  std::vector<json> out;
  auto record = [&](const std::string& step, const std::vector<json>& msgs) {
    for (const json& m : msgs) out.push_back({{"step", step}, {"recv", m}});
  };
  httplib::Client http("127.0.0.1", port);
  auto rest_get = [&](const std::string& step, const std::string& path) {
    auto res = http.Get(path);
    record(step, {res ? json{{"status", res->status}, {"body", json::parse(res->body)}}
                      : json{{"status", 0}}});
  };

  WsClient ws(port, std::string("/ws?poi=golden_square&user_id=") + kGoldenUser);
  record("greeting", ws.read_until("state", 1));
  record("where", ws.exchange({{"type", "query"}, {"text", "Where am I?"}, {"v", 1}}));
  record("navigate", ws.exchange({{"type", "query"}, {"text", "Guide me to the statue"}, {"v", 1}}));
  for (int i = 0; i < 14; ++i) {
    record("advance " + std::to_string(i),
           ws.exchange({{"type", "control"}, {"action", "advance"}, {"dt", 1.0}, {"v", 1}}));
  }
  record("create", ws.exchange({{"type", "query"},
                                {"text", "Place a note here saying Mind the loose paving"},
                                {"v", 1}}));
  rest_get("rest after create", std::string("/annotations?author=") + kGoldenUser);
  record("edit", ws.exchange({{"type", "query"},
                              {"text", "Change the note about the paving to say The paving is fixed"},
                              {"v", 1}}));
  rest_get("rest after edit", std::string("/annotations?author=") + kGoldenUser);
  record("delete",
         ws.exchange({{"type", "query"}, {"text", "Delete the note about the paving"}, {"v", 1}}));
  rest_get("rest after delete", std::string("/annotations?author=") + kGoldenUser);
  return out;
}

inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::vector<nlohmann::json> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

inline void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
  std::ofstream out(path);
  for (const auto& r : rows) out << r.dump() << "\n";
}

inline std::string golden_flow_path() { return test_path("golden/ws_flow.jsonl"); }

}  // namespace lastmeter::test
