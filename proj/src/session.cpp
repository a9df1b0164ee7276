#include "lastmeter/session.hpp"

#include <algorithm>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

Scenario interactive_scenario(const std::string& user_id, const World& world, Pose spawn,
                              const json& prefs) {
  Scenario s;
  s.name = "interactive";
  s.start = spawn;
  s.prefs = prefs.is_object() ? prefs : json::object();
  s.mode = Scenario::Mode::Interactive;
  s.user_id = user_id;
  (void)world;
  return s;
}

json pose_to_json(const Pose& p) {
  return {{"x", p.position.x}, {"y", p.position.y}, {"heading", p.heading_deg}};
}

}  // namespace

bool is_wire_event(const json& event) {
  const std::string type = event.value("type", "");
  return type != "pose" && type != "header" && type != "end";
}

Session::Session(std::string session_id, std::string user_id, std::shared_ptr<World> world,
                 Pose spawn, const json& prefs)
    : id_(std::move(session_id)),
      user_id_(std::move(user_id)),
      world_(world),
      sim_(interactive_scenario(user_id_, *world, spawn, prefs), world) {}

std::vector<json> Session::stamp(std::vector<json> events) {
  std::vector<json> out;
  out.reserve(events.size());
  for (json& e : events) {
    if (!is_wire_event(e)) continue;
    e["v"] = kWireVersion;
    e["seq"] = ++seq_;
    out.push_back(std::move(e));
  }
  return out;
}

json Session::error_message(const std::string& kind, const std::string& message) {
  return {{"type", "error"}, {"kind", kind}, {"message", message}};
}

json Session::state_message() {
  const WalkerState& w = sim_.walker();
  json s = {{"type", "state"},
            {"session_id", id_},
            {"pose", pose_to_json(w.reported_pose)},
            {"true_pose", pose_to_json(w.true_pose)},
            {"t", sim_.now()}};
  if (sim_.guidance()) {
    s["guidance"] = to_string(sim_.guidance()->state());
  } else {
    s["guidance"] = nullptr;
  }
  return s;
}

std::vector<json> Session::open() {
  std::lock_guard lock(mu_);
  if (opened_) return {};
  opened_ = true;
  std::vector<json> events = {{{"type", "session"},
                               {"session_id", id_},
                               {"user_id", user_id_},
                               {"poi", world_->graph.poi_id}}};
  for (json& e : sim_.start()) events.push_back(std::move(e));
  events.push_back(state_message());
  return stamp(std::move(events));
}

std::vector<json> Session::handle_text(const std::string& frame) {
  json message;
  try {
    message = json::parse(frame);
  } catch (const json::exception& e) {
    std::lock_guard lock(mu_);
    return stamp({error_message("schema", std::string("malformed JSON: ") + e.what())});
  }
  return handle(message);
}

std::vector<json> Session::handle(const json& message) {
  std::lock_guard lock(mu_);
  if (!opened_) {
    opened_ = true;
    sim_.start();
  }
  const std::uint64_t correlation = seq_ + 1;
  try {
    return stamp(dispatch_message(message));
  } catch (const Error& e) {
    const bool schema = e.code() == ErrorCode::SchemaError;
    const std::string kind = schema ? "schema" : std::string(to_string(e.code()));
    return stamp({error_message(kind, e.what())});
  } catch (const json::exception& e) {
    return stamp({error_message("schema", e.what())});
  } catch (const std::exception& e) {
    json err = error_message("internal", e.what());
    err["correlation_id"] = id_ + "-" + std::to_string(correlation);
    return stamp({std::move(err)});
  }
}

std::vector<json> Session::dispatch_message(const json& m) {
  if (!m.is_object()) throw Error(ErrorCode::SchemaError, "$: expected object");
  if (!m.contains("type") || !m["type"].is_string()) {
    throw Error(ErrorCode::SchemaError, "$.type: missing field");
  }
  if (m.contains("v") && m["v"] != kWireVersion) {
    throw Error(ErrorCode::SchemaError, "$.v: unsupported version");
  }
  const std::string type = m["type"].get<std::string>();
  std::vector<json> out;
  if (type == "control") {
    if (!m.contains("action") || !m["action"].is_string()) {
      throw Error(ErrorCode::SchemaError, "$.action: missing field");
    }
    const auto control = control_from_string(m["action"].get<std::string>());
    if (!control) throw Error(ErrorCode::SchemaError, "$.action: unknown action");
    double dt = kDefaultControlDtS;
    if (m.contains("dt")) {
      if (!m["dt"].is_number()) throw Error(ErrorCode::SchemaError, "$.dt: expected number");
      dt = m["dt"].get<double>();
    }
    if (!(dt > 0.0 && dt <= 1.0)) throw Error(ErrorCode::SchemaError, "$.dt: must lie in (0, 1]");
    out = sim_.advance(*control, dt);
    // The engine logs compass changes only; clients get one per control step.
    const bool active = sim_.guidance() && sim_.guidance()->state() == GuidanceState::Active;
    const bool has_compass = std::any_of(out.begin(), out.end(), [](const json& e) {
      return e.value("type", "") == "compass";
    });
    if (active && !has_compass) {
      json c = to_json(sim_.last_compass());
      c["t"] = sim_.now();
      out.push_back(std::move(c));
    }
    out.push_back(state_message());
  } else if (type == "query") {
    if (!m.contains("text") || !m["text"].is_string()) {
      throw Error(ErrorCode::SchemaError, "$.text: missing field");
    }
    out = sim_.query(m["text"].get<std::string>());
  } else if (type == "prefs") {
    if (!m.contains("delta") || !m["delta"].is_object()) {
      throw Error(ErrorCode::SchemaError, "$.delta: expected object");
    }
    out = sim_.set_prefs(m["delta"]);
  } else if (type == "state") {
    out.push_back(state_message());
  } else {
    throw Error(ErrorCode::SchemaError, "$.type: unknown message type '" + type + "'");
  }
  return out;
}

Pose default_spawn(const World& world) {
  const auto [lo, hi] = world.graph.bounds();
  Point2 p{0.5 * (lo.x + hi.x), lo.y + 4.5};
  if (!world.grid.is_walkable_point(p)) {
    if (auto c = snap_to_walkable(world.grid, p, 10.0)) p = world.grid.center(*c);
  }
  return {p, 0.0};
}

void SessionHub::add_world(std::shared_ptr<World> world, std::optional<Pose> spawn) {
  std::unique_lock lock(mu_);
  const Pose s = spawn ? *spawn : default_spawn(*world);
  const std::string id = world->graph.poi_id;
  if (worlds_.count(id)) throw Error(ErrorCode::DuplicateId, "POI '" + id + "' already loaded");
  worlds_.emplace(id, Entry{std::move(world), s});
}

std::vector<std::string> SessionHub::poi_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : worlds_) ids.push_back(id);
  return ids;
}

std::shared_ptr<World> SessionHub::world(const std::string& poi_id) const {
  std::shared_lock lock(mu_);
  auto it = worlds_.find(poi_id);
  return it == worlds_.end() ? nullptr : it->second.world;
}

Pose SessionHub::spawn(const std::string& poi_id) const {
  std::shared_lock lock(mu_);
  auto it = worlds_.find(poi_id);
  if (it == worlds_.end()) throw Error(ErrorCode::UnknownPoi, "unknown POI '" + poi_id + "'");
  return it->second.spawn;
}

std::unique_ptr<Session> SessionHub::create_session(const std::string& poi_id,
                                                    const std::string& user_id, const json& prefs) {
  std::shared_ptr<World> w;
  Pose s;
  std::uint64_t n = 0;
  {
    std::unique_lock lock(mu_);
    auto it = worlds_.find(poi_id);
    if (it == worlds_.end()) throw Error(ErrorCode::UnknownPoi, "unknown POI '" + poi_id + "'");
    w = it->second.world;
    s = it->second.spawn;
    n = next_session_++;
  }
  if (user_id.empty()) throw Error(ErrorCode::InvalidArgument, "user_id must not be empty");
  return std::make_unique<Session>("s" + std::to_string(n), user_id, std::move(w), s, prefs);
}

}  // namespace lastmeter
