#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "lastmeter/sim.hpp"

namespace lastmeter {

inline constexpr int kWireVersion = 1;
inline constexpr double kDefaultControlDtS = 0.1;

// One interactive walker bound to a POI. Messages are handled strictly in
// call order; every outgoing message carries "v" and a per-session "seq".
class Session {
 public:
  Session(std::string session_id, std::string user_id, std::shared_ptr<World> world, Pose spawn,
          const nlohmann::json& prefs = nlohmann::json::object());

  // Greeting: a "session" message followed by the initial "state".
  std::vector<nlohmann::json> open();
  // Raw text frame; malformed JSON yields a schema error message.
  std::vector<nlohmann::json> handle_text(const std::string& frame);
  std::vector<nlohmann::json> handle(const nlohmann::json& message);

  const std::string& id() const { return id_; }
  const std::string& user_id() const { return user_id_; }
  const std::string& poi_id() const { return world_->graph.poi_id; }
  Simulation& simulation() { return sim_; }

 private:
  std::vector<nlohmann::json> dispatch_message(const nlohmann::json& message);
  nlohmann::json state_message();
  std::vector<nlohmann::json> stamp(std::vector<nlohmann::json> events);
  nlohmann::json error_message(const std::string& kind, const std::string& message);

  std::string id_;
  std::string user_id_;
  std::shared_ptr<World> world_;
  Simulation sim_;
  std::mutex mu_;
  std::uint64_t seq_ = 0;
  bool opened_ = false;
};

// Engine events that are forwarded to clients (1 Hz pose samples are
// replaced by "state" messages).
bool is_wire_event(const nlohmann::json& event);

// Loaded POIs plus session creation. Each POI's annotation store is shared by
// all sessions on it.
class SessionHub {
 public:
  void add_world(std::shared_ptr<World> world, std::optional<Pose> spawn = std::nullopt);
  std::vector<std::string> poi_ids() const;
  std::shared_ptr<World> world(const std::string& poi_id) const;  // nullptr if unknown
  Pose spawn(const std::string& poi_id) const;

  // Throws UnknownPoi.
  std::unique_ptr<Session> create_session(const std::string& poi_id, const std::string& user_id,
                                          const nlohmann::json& prefs = nlohmann::json::object());

 private:
  struct Entry {
    std::shared_ptr<World> world;
    Pose spawn;
  };
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> worlds_;
  std::uint64_t next_session_ = 1;
};

// South-middle of the walkable bounds, 4.5 m in, snapped to a walkable cell,
// facing north.
Pose default_spawn(const World& world);

}  // namespace lastmeter
