#include <doctest.h>

#include "lastmeter/error.hpp"
#include "lastmeter/session.hpp"
#include "test_support.hpp"

using namespace lastmeter;
using nlohmann::json;

namespace {

std::unique_ptr<SessionHub> hub_with_fixture() {
  auto hub = std::make_unique<SessionHub>();
  hub->add_world(test::fixture_world());
  return hub;
}

std::vector<std::string> types(const std::vector<json>& msgs) {
  std::vector<std::string> out;
  for (const json& m : msgs) out.push_back(m.value("type", ""));
  return out;
}

json strip(json m) {
  m.erase("v");
  m.erase("seq");
  return m;
}

json control(const std::string& action, double dt = 1.0) {
  return {{"type", "control"}, {"action", action}, {"dt", dt}, {"v", 1}};
}

json query(const std::string& text) { return {{"type", "query"}, {"text", text}, {"v", 1}}; }

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("default spawn and hub") {
    auto hub = hub_with_fixture();
    const Pose s = hub->spawn("golden_square");
    CHECK(s.position.x == 0.0);
    CHECK(s.position.y == -15.5);
    CHECK(s.heading_deg == 0.0);
    CHECK(hub->poi_ids() == std::vector<std::string>{"golden_square"});
    CHECK(hub->world("nowhere") == nullptr);
    CHECK_THROWS_AS(hub->create_session("nowhere", "amy"), Error);
    try {
      hub->create_session("nowhere", "amy");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownPoi);
    }
    CHECK_THROWS_AS(hub->create_session("golden_square", ""), Error);
    CHECK_THROWS_AS(hub->add_world(test::fixture_world()), Error);  // duplicate id
    CHECK(hub->create_session("golden_square", "amy")->id() == "s2");
  }

  TEST_CASE("greeting order and seq") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    CHECK(s->id() == "s1");
    const auto g = s->open();
    REQUIRE(g.size() >= 2);
    CHECK(g.front()["type"] == "session");
    CHECK(g.front()["user_id"] == "amy");
    CHECK(g.front()["poi"] == "golden_square");
    CHECK(g.back()["type"] == "state");
    CHECK(g.back()["guidance"].is_null());
    for (std::size_t i = 0; i < g.size(); ++i) {
      CHECK(g[i]["v"] == 1);
      CHECK(g[i]["seq"] == i + 1);
      CHECK(is_wire_event(g[i]));
    }
    CHECK(s->open().empty());  // only once
  }

  TEST_CASE("seq is monotonic across messages") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    std::uint64_t last = 0;
    auto check = [&](const std::vector<json>& msgs) {
      for (const json& m : msgs) {
        CHECK(m["seq"].get<std::uint64_t>() == last + 1);
        last = m["seq"];
      }
    };
    check(s->open());
    check(s->handle(query("Where am I?")));
    check(s->handle_text("{broken"));
    check(s->handle(query("Guide me to the statue")));
    for (int i = 0; i < 5; ++i) check(s->handle(control("advance")));
    check(s->handle({{"type", "state"}}));
    CHECK(last > 10);
  }

  TEST_CASE("control advance yields state, plus compass while guiding") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    s->open();
    auto before = s->handle(control("advance"));
    CHECK(types(before) == std::vector<std::string>{"state"});
    CHECK(before.back()["pose"]["y"].get<double>() == doctest::Approx(-14.5));

    const auto nav = s->handle(query("Guide me to the statue"));
    CHECK(nav.front()["type"] == "reply");
    for (int i = 0; i < 3; ++i) {
      const auto out = s->handle(control("advance"));
      CHECK(out.back()["type"] == "state");
      CHECK(out.back()["guidance"] == "active");
      int compass = 0;
      for (const json& m : out) compass += m["type"] == "compass";
      CHECK(compass == 1);
      CHECK(out.back()["t"] == s->simulation().now());
    }
    // Compass reflects the pose after the step.
    const auto turned = s->handle(control("turn_right"));
    const json* c = nullptr;
    for (const json& m : turned) {
      if (m["type"] == "compass") c = &m;
    }
    REQUIRE(c != nullptr);
    const double heading = turned.back()["pose"]["heading"];
    CHECK(heading > 0.0);
    CHECK(c->at("bearing").get<double>() > 180.0);  // target now to the left
  }

  TEST_CASE("default dt") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    s->open();
    const auto out = s->handle({{"type", "control"}, {"action", "advance"}});
    CHECK(out.back()["t"].get<double>() == doctest::Approx(kDefaultControlDtS));
  }

  TEST_CASE("query reply") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    s->open();
    const auto r = s->handle(query("Where am I?"));
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "reply");
    CHECK(r[0]["text"].get<std::string>().find("golden square") != std::string::npos);
  }

  TEST_CASE("prefs message") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    s->open();
    const auto r = s->handle({{"type", "prefs"}, {"delta", {{"unit", "steps"}}}});
    REQUIRE(r.size() == 1);
    CHECK(r[0]["type"] == "prefs");
    CHECK(r[0]["prefs"]["unit"] == "steps");
    const auto bad = s->handle({{"type", "prefs"}, {"delta", {{"unit", "furlongs"}}}});
    CHECK(bad[0]["type"] == "error");
  }

  TEST_CASE("schema errors") {
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    s->open();
    auto kind = [&](const std::string& frame) {
      const auto out = s->handle_text(frame);
      REQUIRE(out.size() == 1);
      CHECK(out[0]["type"] == "error");
      return out[0]["kind"].get<std::string>();
    };
    CHECK(kind("{not json") == "schema");
    CHECK(kind("[1,2]") == "schema");
    CHECK(kind(R"({"text":"hi"})") == "schema");
    CHECK(kind(R"({"type":"dance"})") == "schema");
    CHECK(kind(R"({"type":"query","text":"hi","v":2})") == "schema");
    CHECK(kind(R"({"type":"query"})") == "schema");
    CHECK(kind(R"({"type":"control","action":"fly"})") == "schema");
    CHECK(kind(R"({"type":"control","action":"advance","dt":0})") == "schema");
    CHECK(kind(R"({"type":"control","action":"advance","dt":1.5})") == "schema");
    CHECK(kind(R"({"type":"control","action":"advance","dt":"1"})") == "schema");
    CHECK(kind(R"({"type":"prefs","delta":3})") == "schema");
    // The walker did not move.
    CHECK(s->simulation().now() == 0.0);
  }

  TEST_CASE("adapter transparency") {
    // The same trace on a bare Simulation gives the same engine events.
    auto hub = hub_with_fixture();
    auto s = hub->create_session("golden_square", "amy");
    Scenario sc;
    sc.name = "interactive";
    sc.start = hub->spawn("golden_square");
    sc.mode = Scenario::Mode::Interactive;
    sc.user_id = "amy";
    Simulation sim(sc, test::fixture_world());

    auto wire = [](std::vector<json> events) {
      std::vector<json> out;
      for (json& e : events) {
        if (is_wire_event(e)) out.push_back(std::move(e));
      }
      return out;
    };
    auto session_payloads = [](const std::vector<json>& msgs) {
      std::vector<json> out;
      for (const json& m : msgs) {
        if (m["type"] != "state" && m["type"] != "session") out.push_back(strip(m));
      }
      return out;
    };

    CHECK(session_payloads(s->open()) == wire(sim.start()));
    const std::vector<json> trace = {query("Where am I?"), query("Guide me to the statue"),
                                     control("advance"), control("advance"), control("turn_left", 0.5),
                                     control("advance"), query("Repeat that"),
                                     control("turn_right", 0.5), control("advance"),
                                     query("Place a note here saying Mind the gap")};
    for (const json& m : trace) {
      const auto got = session_payloads(s->handle(m));
      std::vector<json> want;
      if (m["type"] == "query") {
        want = wire(sim.query(m["text"].get<std::string>()));
      } else {
        want = wire(sim.advance(*control_from_string(m["action"].get<std::string>()), m["dt"].get<double>()));
      }
      INFO(m.dump());
      REQUIRE(got.size() >= want.size());
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
      // At most one synthesized compass after the engine events.
      CHECK(got.size() - want.size() <= 1);
      if (got.size() > want.size()) CHECK(got.back()["type"] == "compass");
    }
  }

  TEST_CASE("sessions on one POI share the annotation store") {
    auto hub = hub_with_fixture();
    auto a = hub->create_session("golden_square", "amy");
    auto b = hub->create_session("golden_square", "ben");
    a->open();
    b->open();
    const auto created = a->handle(query("Place a note here saying Loose paving stone"));
    CHECK(created.front()["type"] == "reply");
    CHECK(hub->world("golden_square")->store.size() == 40);
    const auto seen = b->handle(query("Read the notes from amy"));
    CHECK(seen.front()["text"].get<std::string>().find("Loose paving stone") != std::string::npos);
    const auto denied = b->handle(query("Delete the note about the paving stone"));
    CHECK(hub->world("golden_square")->store.size() == 40);
    CHECK(denied.front()["type"] == "reply");
  }
}
