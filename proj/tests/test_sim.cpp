#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "lastmeter/error.hpp"
#include "lastmeter/sim.hpp"
#include "test_support.hpp"

using namespace lastmeter;
using nlohmann::json;

namespace {

Scenario scenario(const std::string& name) { return load_scenario(test::data_path("golden_square/" + name)); }

int count(const RunReport& r, const std::string& key) {
  const auto it = r.event_counts.find(key);
  return it == r.event_counts.end() ? 0 : it->second;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lastmeter_" + name);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("step kinematics") {
    WalkerState s;
    s.true_pose = {{0, 0}, 0};
    const WalkerState a = step(s, Control::Advance, 1.0);
    CHECK(a.true_pose.position.x == doctest::Approx(0.0));
    CHECK(a.true_pose.position.y == doctest::Approx(1.0));
    const WalkerState l = step(s, Control::TurnLeft, 0.5);
    CHECK(l.true_pose.heading_deg == doctest::Approx(315.0));
    CHECK(step(s, Control::TurnRight, 0.5).true_pose.heading_deg == doctest::Approx(45.0));
    CHECK(step(s, Control::Stop, 0.5).true_pose == s.true_pose);
    CHECK_THROWS_AS(step(s, Control::Advance, 0.0), Error);
    CHECK_THROWS_AS(step(s, Control::Advance, 1.5), Error);

    NavGrid g = NavGrid::open(10, 10);
    for (int x = 0; x < 10; ++x) g.walkable[g.index({x, 5})] = 0;
    WalkerState w;
    w.true_pose = {{2.5, 4.5}, 0};
    const WalkerState b = step(w, Control::Advance, 1.0, &g);
    CHECK(b.true_pose.heading_deg == 0.0);
    CHECK(b.true_pose.position.y < 5.0);
    CHECK(b.true_pose.position.y > 4.99);
    CHECK(g.is_walkable_point(b.true_pose.position));
  }

  TEST_CASE("walker never enters a blocked cell under random controls") {
    const World& w = test::fixture();
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> c(0, 3);
    std::uniform_real_distribution<double> dt(0.05, 1.0);
    WalkerState s;
    s.true_pose = test::kRampPose;
    s.speed_mps = 1.4;
    for (int i = 0; i < 20000; ++i) {
      const Control ctl = i % 3 == 0 ? static_cast<Control>(c(rng)) : Control::Advance;
      s = step(s, ctl, dt(rng), &w.grid);
      REQUIRE(w.grid.is_walkable_point(s.true_pose.position));
    }
  }

  TEST_CASE("autopilot policy") {
    WalkerState s;
    s.true_pose = {{0, 0}, 0};
    Autopilot a;
    CHECK(a.decide({}, {CompassLevel::Low, 40.0}, s, 0.1) == Control::TurnRight);
    CHECK(a.decide({}, {CompassLevel::Low, 320.0}, s, 0.1) == Control::TurnLeft);
    Autopilot b;
    CHECK(b.decide({}, {CompassLevel::High, 0.0}, s, 0.1) == Control::Advance);
    InstructionEvent arrival;
    arrival.kind = InstructionKind::Arrival;
    CHECK(b.decide({arrival}, {CompassLevel::High, 0.0}, s, 0.1) == Control::Stop);
    CHECK(b.stopped());
    CHECK(b.decide({}, {CompassLevel::High, 0.0}, s, 0.1) == Control::Stop);
  }

  TEST_CASE("drift processes") {
    DriftModel bias;
    bias.kind = DriftModel::Kind::Bias;
    bias.offset = {1, 2};
    bias.start_s = 5.0;
    DriftProcess p(bias);
    CHECK(p.offset_at(4.9, 0.1, 0.0) == Point2{0, 0});
    CHECK(p.offset_at(5.0, 0.1, 0.0) == Point2{1, 2});
    bias.start_progress = 0.8;
    DriftProcess q(bias);
    CHECK(q.offset_at(100.0, 0.1, 0.79) == Point2{0, 0});
    CHECK(q.offset_at(100.1, 0.1, 0.8) == Point2{1, 2});
    CHECK(q.offset_at(100.2, 0.1, 0.1) == Point2{1, 2});  // latched

    DriftModel rw;
    rw.kind = DriftModel::Kind::RandomWalk;
    rw.sigma_m_per_sqrt_s = 0.2;
    rw.seed = 99;
    DriftProcess r1(rw), r2(rw);
    double sum_sq = 0;
    Point2 last;
    for (int k = 1; k <= 1000; ++k) {
      const Point2 a = r1.offset_at(k * 0.1, 0.1, 0);
      REQUIRE(a == r2.offset_at(k * 0.1, 0.1, 0));
      const Point2 d = a - last;
      sum_sq += d.x * d.x + d.y * d.y;
      last = a;
    }
    // Per-axis increment variance sigma^2 dt.
    CHECK(sum_sq / 2000 == doctest::Approx(0.04 * 0.1).epsilon(0.15));
    DriftProcess same(rw);
    rw.seed = 100;
    DriftProcess other(rw);
    CHECK_FALSE(other.offset_at(0.1, 0.1, 0) == same.offset_at(0.1, 0.1, 0));
  }

  TEST_CASE("scenario loading errors") {
    try {
      load_scenario("/nonexistent/scenario.json");
      FAIL("expected ScenarioLoadError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ScenarioLoadError);
    }
    json doc = json::parse(test::slurp(test::data_path("golden_square/emma.json")));
    doc["mode"] = "teleport";
    CHECK_THROWS_AS(scenario_from_json(doc, test::data_path("golden_square")), Error);
    doc = json::parse(test::slurp(test::data_path("golden_square/emma.json")));
    doc["prefs"] = {{"unit", "furlongs"}};
    CHECK_THROWS_AS(scenario_from_json(doc, test::data_path("golden_square")), Error);
    doc = json::parse(test::slurp(test::data_path("golden_square/ramp_walk.json")));
    doc["script"] = {{{"t", 5.0}, {"action", "advance"}}, {{"t", 1.0}, {"action", "stop"}}};
    CHECK_THROWS_AS(scenario_from_json(doc, test::data_path("golden_square")), Error);
  }

  TEST_CASE("fixture routes succeed under autopilot") {
    for (const char* name : {"emma.json", "ben.json"}) {
      const RunResult r = run_scenario(scenario(name));
      CAPTURE(name);
      CHECK(r.report.success);
      CHECK(r.report.engine_arrived);
      CHECK(r.report.end_reason == "arrival");
      CHECK(r.report.elapsed_s >= 30.0);
      CHECK(r.report.elapsed_s <= 60.0);
      CHECK(count(r.report, "turn") == 3);
      CHECK(count(r.report, "arrival") == 1);
      CHECK(count(r.report, "deviation") == 0);
      CHECK(r.report.final_goal_distance_m <= kSuccessRadiusM);
      CHECK(std::find(r.report.landmarks.begin(), r.report.landmarks.end(), "flower bed") != r.report.landmarks.end());
      CHECK(r.report.path_length_m == doctest::Approx(31).epsilon(0.15));
    }
  }

  TEST_CASE("walker stays on walkable cells in every fixture transcript") {
    const World& w = test::fixture();
    for (const char* name : {"emma.json", "ben.json", "emma_drift.json", "ramp_walk.json"}) {
      const RunResult r = run_scenario(scenario(name));
      int poses = 0;
      for (const auto& e : r.transcript) {
        if (e["type"] != "pose" && e["type"] != "end") continue;
        const Point2 p{e["true"]["x"].get<double>(), e["true"]["y"].get<double>()};
        REQUIRE(w.grid.is_walkable_point(p));
        ++poses;
      }
      CHECK(poses > 5);
    }
    // Tick-level check on one run.
    Simulation sim(scenario("emma.json"), test::fixture_world());
    sim.start();
    while (!sim.done() && sim.now() < 120) {
      sim.advance(sim.next_control(), kSimTickS);
      REQUIRE(w.grid.is_walkable_point(sim.walker().true_pose.position));
      if (sim.guidance() && sim.guidance()->state() == GuidanceState::Arrived) break;
    }
  }

  TEST_CASE("drift reproduces arrival short of the goal") {
    const RunResult r = run_scenario(scenario("emma_drift.json"));
    CHECK(r.report.engine_arrived);
    CHECK_FALSE(r.report.success);
    CHECK(r.report.final_goal_distance_m == doctest::Approx(2.0).epsilon(0.25));
    CHECK(std::fabs(r.report.final_goal_distance_m - 2.0) <= 0.5);
  }

  TEST_CASE("bias perpendicular to the final approach lands within d +- 0.5") {
    Scenario base = scenario("emma.json");
    const auto world = load_world(base.poi_path, base.annotations_path);
    const Route route =
        plan_route(world->graph, world->grid, base.start, world->store.anchor_point(*world->store.get("21"), base.start.position));
    const auto& wp = route.waypoints;
    Point2 dir = wp.back() - wp[wp.size() - 2];
    dir = dir * (1.0 / dir.norm());
    const Point2 perp{dir.y, -dir.x};
    for (double d : {1.0, 1.5, 2.0, 2.5}) {
      for (double sign : {1.0, -1.0}) {
        Scenario s = base;
        s.drift.kind = DriftModel::Kind::Bias;
        s.drift.offset = perp * (d * sign);
        s.drift.start_progress = 0.8;
        const RunResult r = run_scenario(s);
        CAPTURE(d);
        CAPTURE(sign);
        CHECK(r.report.engine_arrived);
        CHECK(std::fabs(r.report.final_goal_distance_m - d) <= 0.5);
      }
    }
  }

  TEST_CASE("scripted ramp walk triggers the ramp note with vibration") {
    const RunResult r = run_scenario(scenario("ramp_walk.json"));
    CHECK(r.report.end_reason == "stopped");
    CHECK(std::find(r.report.triggers.begin(), r.report.triggers.end(), "7") != r.report.triggers.end());
    bool ramp_vibration = false;
    for (const auto& e : r.transcript) {
      if (e["type"] == "annotation_trigger" && e["id"] == "7") {
        CHECK(e["category"] == "accessibility");
      }
      if (e["type"] == "vibration" && e["duration_s"] == 0.5) ramp_vibration = true;
    }
    CHECK(ramp_vibration);
  }

  TEST_CASE("transcripts are deterministic and replay to the same report") {
    for (const char* name : {"emma.json", "emma_drift.json", "ramp_walk.json"}) {
      const RunResult a = run_scenario(scenario(name));
      const RunResult b = run_scenario(scenario(name));
      const std::string ja = transcript_to_jsonl(a.transcript);
      CHECK(ja == transcript_to_jsonl(b.transcript));
      CHECK(a.report == b.report);
      CHECK(report_from_transcript(a.transcript) == a.report);
      const auto path = temp_file(std::string(name) + ".jsonl");
      write_file(path, ja);
      CHECK(replay(path.string()) == a.report);
      CHECK(parse_transcript(ja).size() == a.transcript.size());
      std::filesystem::remove(path);
    }
  }

  TEST_CASE("random-walk drift is seed-determined end to end") {
    Scenario s = scenario("ben.json");
    s.drift.kind = DriftModel::Kind::RandomWalk;
    s.drift.sigma_m_per_sqrt_s = 0.05;
    s.drift.seed = 11;
    const std::string a = transcript_to_jsonl(run_scenario(s).transcript);
    CHECK(a == transcript_to_jsonl(run_scenario(s).transcript));
    s.drift.seed = 12;
    CHECK(a != transcript_to_jsonl(run_scenario(s).transcript));
  }

  TEST_CASE("replay error cases") {
    const RunResult a = run_scenario(scenario("ramp_walk.json"));
    std::string jsonl = transcript_to_jsonl(a.transcript);
    // Drop the end event.
    jsonl.pop_back();
    const std::string truncated = jsonl.substr(0, jsonl.rfind('\n') + 1);
    const auto path = temp_file("truncated.jsonl");
    write_file(path, truncated);
    try {
      replay(path.string());
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaError);
    }
    // Cut mid-line.
    write_file(path, truncated.substr(0, truncated.size() - 7));
    CHECK_THROWS_AS(replay(path.string()), Error);
    write_file(path, "");
    const RunReport empty = replay(path.string());
    CHECK_FALSE(empty.success);
    CHECK(empty.event_counts.empty());
    CHECK(empty.elapsed_s == 0.0);
    std::filesystem::remove(path);
  }

  TEST_CASE("query goal drives navigation through the orchestrator") {
    Scenario s = scenario("emma.json");
    s.goal = {};
    s.goal.kind = Goal::Kind::Query;
    s.goal.query = "Please, guide me to the statue!";
    const RunResult r = run_scenario(s);
    CHECK(r.report.engine_arrived);
    bool replied = false;
    for (const auto& e : r.transcript) {
      if (e["type"] == "reply") replied = e["actions"].size() == 1;
    }
    CHECK(replied);
  }

  TEST_CASE("report json") {
    const RunResult r = run_scenario(scenario("ramp_walk.json"));
    const json j = to_json(r.report);
    CHECK(j.contains("success"));
    CHECK(j["event_counts"].is_object());
  }
}
