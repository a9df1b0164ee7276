#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "lastmeter/error.hpp"
#include "lastmeter/orchestrator.hpp"

namespace lastmeter {

using nlohmann::json;

RecordedPort::RecordedPort(const json& transcript) {
  if (!transcript.is_object() || !transcript.contains("entries") ||
      !transcript.at("entries").is_object()) {
    throw Error(ErrorCode::SchemaError, "$.entries: missing field");
  }
  for (const auto& [q, a] : transcript.at("entries").items()) {
    if (!a.is_string()) throw Error(ErrorCode::SchemaError, "$.entries." + q + ": expected string");
    entries_[normalize_phrase(q)] = a.get<std::string>();
  }
}

std::shared_ptr<RecordedPort> RecordedPort::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open transcript '" + path + "'");
  try {
    return std::make_shared<RecordedPort>(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

std::string RecordedPort::ask(const std::string& question, const PortContext&) {
  auto it = entries_.find(normalize_phrase(question));
  if (it == entries_.end()) return "I don't have an answer for that right now.";
  return it->second;
}

ExternalMapPort::ExternalMapPort(std::string host, int port, std::string path, double timeout_s)
    : host_(std::move(host)), port_(port), path_(std::move(path)), timeout_s_(timeout_s) {}

std::string ExternalMapPort::ask(const std::string& question, const PortContext& ctx) {
  httplib::Client cli(host_, port_);
  const auto usec = static_cast<long>(timeout_s_ * 1e6);
  cli.set_connection_timeout(0, usec);
  cli.set_read_timeout(0, usec);
  httplib::Params params = {{"lat", std::to_string(ctx.location.lat)},
                            {"lon", std::to_string(ctx.location.lon)},
                            {"radius", "500"},
                            {"q", question}};
  auto res = cli.Get(path_, params, httplib::Headers{});
  if (!res || res->status != 200) {
    throw Error(ErrorCode::PortUnavailable,
                "map service " + host_ + ":" + std::to_string(port_) + " unreachable");
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::PortUnavailable, "map service returned malformed JSON");
  }
  const json places = body.value("places", json::array());
  if (!places.is_array() || places.empty()) return "I couldn't find any places nearby.";
  std::string out = "Nearby places: ";
  std::size_t shown = 0;
  for (const json& p : places) {
    if (shown == 3) break;
    if (shown) out += ", ";
    out += p.value("name", std::string("an unnamed place"));
    if (p.contains("distance_m") && p["distance_m"].is_number()) {
      out += " about " + std::to_string(std::lround(p["distance_m"].get<double>())) + " meters away";
    }
    ++shown;
  }
  return out + ".";
}

ExternalTextPort::ExternalTextPort(std::string host, int port, std::string path, double timeout_s)
    : host_(std::move(host)), port_(port), path_(std::move(path)), timeout_s_(timeout_s) {}

std::string ExternalTextPort::ask(const std::string& question, const PortContext& ctx) {
  httplib::Client cli(host_, port_);
  const auto usec = static_cast<long>(timeout_s_ * 1e6);
  cli.set_connection_timeout(0, usec);
  cli.set_read_timeout(0, usec);
  const json req = {{"question", question},
                    {"lat", ctx.location.lat},
                    {"lon", ctx.location.lon},
                    {"poi", ctx.poi_id}};
  auto res = cli.Post(path_, req.dump(), "application/json");
  if (!res || res->status != 200) {
    throw Error(ErrorCode::PortUnavailable,
                "service " + host_ + ":" + std::to_string(port_) + " unreachable");
  }
  try {
    return json::parse(res->body).at("answer").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::PortUnavailable, "service returned malformed JSON");
  }
}

AgentPorts AgentPorts::stubs() {
  return {std::make_shared<StubPort>("I can't see the camera view right now."),
          std::make_shared<StubPort>("I can't search the web right now."),
          std::make_shared<StubPort>("I can't reach the map service right now.")};
}

}  // namespace lastmeter
