#include "lastmeter/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kControlNames = {"advance", "turn_left", "turn_right",
                                                           "stop"};

// Snaps simulated time to a microsecond grid so repeated 0.1 s steps print
// as 0.3 rather than 0.30000000000000004.
double snap_time(double t) { return std::round(t * 1e6) / 1e6; }

bool free_at(const NavGrid& grid, Point2 p) { return grid.is_walkable_point(p); }

// Farthest walkable point along p + s*delta, s in [0, 1], approaching the
// first blocked sample by bisection.
Point2 clamp_segment(const NavGrid& grid, Point2 p, Point2 delta) {
  const double len = delta.norm();
  if (len <= 0.0) return p;
  const double h = grid.resolution_m / 4.0;
  const int n = std::max(1, static_cast<int>(std::ceil(len / h)));
  double ok = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    if (!free_at(grid, p + delta * s)) {
      double lo = ok;
      double hi = s;
      for (int k = 0; k < 30; ++k) {
        const double mid = 0.5 * (lo + hi);
        (free_at(grid, p + delta * mid) ? lo : hi) = mid;
      }
      return p + delta * lo;
    }
    ok = s;
  }
  return p + delta;
}

}  // namespace

std::string_view to_string(Control c) { return kControlNames[static_cast<std::size_t>(c)]; }

std::optional<Control> control_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kControlNames.size(); ++i) {
    if (kControlNames[i] == s) return static_cast<Control>(i);
  }
  return std::nullopt;
}

WalkerState step(const WalkerState& state, Control control, double dt_s, const NavGrid* grid) {
  if (!(dt_s > 0.0 && dt_s <= 1.0)) throw Error(ErrorCode::InvalidArgument, "dt must lie in (0, 1]");
  WalkerState s = state;
  switch (control) {
    case Control::TurnLeft:
      s.true_pose.heading_deg = normalize_deg(s.true_pose.heading_deg - s.turn_rate_dps * dt_s);
      break;
    case Control::TurnRight:
      s.true_pose.heading_deg = normalize_deg(s.true_pose.heading_deg + s.turn_rate_dps * dt_s);
      break;
    case Control::Advance: {
      const Point2 p = s.true_pose.position;
      const Point2 delta = heading_vector(s.true_pose.heading_deg) * (s.speed_mps * dt_s);
      if (!grid || !free_at(*grid, p)) {
        s.true_pose.position = p + delta;
        break;
      }
      Point2 q = clamp_segment(*grid, p, delta);
      if (distance(q, p + delta) > 1e-12) {
        // Blocked: slide along whichever axis component still makes progress,
        // the way a cane user trails an edge.
        const Point2 rest = p + delta - q;
        Point2 best = q;
        for (Point2 axis : {Point2{rest.x, 0.0}, Point2{0.0, rest.y}}) {
          const Point2 r = clamp_segment(*grid, q, axis);
          if (distance(r, q) > distance(best, q) + 1e-12) best = r;
        }
        q = best;
      }
      s.true_pose.position = q;
      break;
    }
    case Control::Stop:
      break;
  }
  return s;
}

DriftProcess::DriftProcess(const DriftModel& model) : model_(model), rng_(model.seed) {}

double DriftProcess::gaussian() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  // Box-Muller; u1 in (0, 1] keeps the log finite.
  const double u1 = static_cast<double>((rng_() >> 11) + 1) * 0x1p-53;
  const double u2 = static_cast<double>(rng_() >> 11) * 0x1p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  return r * std::cos(2.0 * kPi * u2);
}

Point2 DriftProcess::offset_at(double now, double dt_s, double route_progress) {
  switch (model_.kind) {
    case DriftModel::Kind::None:
      return {};
    case DriftModel::Kind::Bias:
      if (!active_) {
        active_ = model_.start_progress ? route_progress >= *model_.start_progress - 1e-12
                                        : now >= model_.start_s - 1e-9;
      }
      return active_ ? model_.offset : Point2{};
    case DriftModel::Kind::RandomWalk:
      active_ = true;
      if (dt_s > 0.0) {
        const double scale = model_.sigma_m_per_sqrt_s * std::sqrt(dt_s);
        const double gx = gaussian();
        const double gy = gaussian();
        walk_ = walk_ + Point2{gx * scale, gy * scale};
      }
      return walk_;
  }
  return {};
}

Control Autopilot::decide(const std::vector<InstructionEvent>& events, const CompassSignal& compass,
                          const WalkerState& state, double dt_s) {
  if (stopped_) return Control::Stop;
  for (const InstructionEvent& e : events) {
    if (e.kind == InstructionKind::Arrival) {
      stopped_ = true;
      return Control::Stop;
    }
    if (e.kind == InstructionKind::Deviation || e.kind == InstructionKind::Turn) aligning_ = true;
  }
  if (compass.level == CompassLevel::Low) aligning_ = true;
  const double err = signed_bearing_error(compass.rel_bearing_to_next);
  if (aligning_) {
    // Rotate until the next turn increment would overshoot.
    if (std::abs(err) <= state.turn_rate_dps * dt_s / 2.0) {
      aligning_ = false;
      return Control::Advance;
    }
    return err < 0.0 ? Control::TurnLeft : Control::TurnRight;
  }
  return Control::Advance;
}

namespace {

Point2 point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::ScenarioLoadError, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path.string();
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

Scenario scenario_from_json(const json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::ScenarioLoadError, "$: expected object");
  Scenario s;
  try {
    s.name = doc.value("name", std::string("scenario"));
    if (!doc.contains("poi")) throw Error(ErrorCode::ScenarioLoadError, "$.poi: missing field");
    s.poi_path = resolve_path(doc.at("poi").get<std::string>(), base_dir);
    s.annotations_path = resolve_path(doc.value("annotations", std::string()), base_dir);
    if (!doc.contains("start")) throw Error(ErrorCode::ScenarioLoadError, "$.start: missing field");
    const json& st = doc.at("start");
    s.start.position = {st.at("x").get<double>(), st.at("y").get<double>()};
    s.start.heading_deg = normalize_deg(st.value("heading", 0.0));
    if (doc.contains("goal") && !doc.at("goal").is_null()) {
      const json& g = doc.at("goal");
      if (g.contains("class")) {
        s.goal.kind = Goal::Kind::Class;
        s.goal.class_label = g.at("class").get<std::string>();
      } else if (g.contains("annotation")) {
        s.goal.kind = Goal::Kind::Annotation;
        s.goal.annotation_id = g.at("annotation").get<std::string>();
      } else if (g.contains("point")) {
        s.goal.kind = Goal::Kind::Point;
        s.goal.point = point_from(g.at("point"), "$.goal.point");
      } else if (g.contains("query")) {
        s.goal.kind = Goal::Kind::Query;
        s.goal.query = g.at("query").get<std::string>();
      } else {
        throw Error(ErrorCode::ScenarioLoadError, "$.goal: expected class, annotation, point or query");
      }
    }
    s.prefs = doc.value("prefs", json::object());
    UserPrefs probe;
    apply_prefs_delta(probe, s.prefs);
    if (doc.contains("drift")) {
      const json& d = doc.at("drift");
      const std::string kind = d.value("kind", std::string("none"));
      if (kind == "bias") {
        s.drift.kind = DriftModel::Kind::Bias;
        s.drift.offset = point_from(d.at("offset"), "$.drift.offset");
        s.drift.start_s = d.value("start_s", 0.0);
        if (d.contains("start_progress")) s.drift.start_progress = d.at("start_progress").get<double>();
      } else if (kind == "random_walk") {
        s.drift.kind = DriftModel::Kind::RandomWalk;
        s.drift.sigma_m_per_sqrt_s = d.at("sigma").get<double>();
        if (d.contains("seed")) s.drift.seed = d.at("seed").get<std::uint64_t>();
      } else if (kind != "none") {
        throw Error(ErrorCode::ScenarioLoadError, "$.drift.kind: unknown drift model '" + kind + "'");
      }
    }
    const std::string mode = doc.value("mode", std::string("autopilot"));
    if (mode == "autopilot") {
      s.mode = Scenario::Mode::Autopilot;
    } else if (mode == "scripted") {
      s.mode = Scenario::Mode::Scripted;
    } else if (mode == "interactive") {
      s.mode = Scenario::Mode::Interactive;
    } else {
      throw Error(ErrorCode::ScenarioLoadError, "$.mode: unknown mode '" + mode + "'");
    }
    double last_t = -INFINITY;
    for (const json& c : doc.value("script", json::array())) {
      ScriptCommand cmd;
      cmd.t = c.at("t").get<double>();
      const auto ctl = control_from_string(c.at("action").get<std::string>());
      if (!ctl) throw Error(ErrorCode::ScenarioLoadError, "$.script: unknown action");
      if (cmd.t < last_t) throw Error(ErrorCode::ScenarioLoadError, "$.script: commands out of order");
      cmd.control = *ctl;
      last_t = cmd.t;
      s.script.push_back(cmd);
    }
    s.seed = doc.value("seed", std::uint64_t{0});
    if (s.drift.kind == DriftModel::Kind::RandomWalk && !doc.at("drift").contains("seed")) {
      s.drift.seed = s.seed;
    }
    s.speed_mps = doc.value("speed_mps", 1.0);
    s.turn_rate_dps = doc.value("turn_rate_dps", 90.0);
    s.timeout_s = doc.value("timeout_s", kSimTimeoutS);
    s.user_id = doc.value("user_id", std::string("walker"));
    if (!(s.speed_mps > 0.0) || !(s.turn_rate_dps > 0.0)) {
      throw Error(ErrorCode::ScenarioLoadError, "$: speeds must be positive");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ScenarioLoadError, std::string("$: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ScenarioLoadError) throw;
    throw Error(ErrorCode::ScenarioLoadError, e.what());
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ScenarioLoadError, "cannot open scenario '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ScenarioLoadError, path + ": " + e.what());
  }
  return scenario_from_json(doc, std::filesystem::path(path).parent_path().string());
}

std::shared_ptr<World> load_world(const std::string& poi_path, const std::string& annotations_path) {
  auto world = std::make_shared<World>();
  world->graph = load_poi_file(poi_path);
  world->grid = build_grid(world->graph);
  if (!annotations_path.empty()) world->store.load_jsonl(annotations_path);
  return world;
}

json to_json(const RunReport& r) {
  return {{"success", r.success},
          {"engine_arrived", r.engine_arrived},
          {"end_reason", r.end_reason},
          {"elapsed_s", r.elapsed_s},
          {"path_length_m", r.path_length_m},
          {"final_goal_distance_m", r.final_goal_distance_m},
          {"event_counts", r.event_counts},
          {"triggers", r.triggers},
          {"landmarks", r.landmarks}};
}

Simulation::Simulation(const Scenario& scenario, std::shared_ptr<World> world)
    : scenario_(scenario), world_(std::move(world)), drift_(scenario.drift) {
  walker_.true_pose = scenario.start;
  walker_.reported_pose = scenario.start;
  walker_.speed_mps = scenario.speed_mps;
  walker_.turn_rate_dps = scenario.turn_rate_dps;
  ctx_.user_id = scenario.user_id;
  ctx_.graph = &world_->graph;
  ctx_.grid = &world_->grid;
  ctx_.store = &world_->store;
  ctx_.pose_provider = [this] { return walker_.reported_pose; };
  apply_prefs_delta(ctx_.prefs, scenario.prefs);
  ctx_.ports = AgentPorts::stubs();
}

json Simulation::pose_json(const Pose& p) const {
  return {{"x", p.position.x}, {"y", p.position.y}, {"heading", p.heading_deg}};
}

double Simulation::route_progress() const {
  if (!guidance_ || route_length_ <= 0.0) return 0.0;
  const double rem = guidance_->remaining_distance(walker_.true_pose.position);
  return std::clamp(1.0 - rem / route_length_, 0.0, 1.0);
}

std::vector<json> Simulation::start() {
  std::vector<json> out;
  if (started_) return out;
  started_ = true;
  const Point2 off = drift_.offset_at(now_, 0.0, 0.0);
  walker_.reported_pose = {walker_.true_pose.position + off, walker_.true_pose.heading_deg};
  static constexpr std::array<std::string_view, 3> kModes = {"autopilot", "scripted", "interactive"};
  out.push_back({{"type", "header"},
                 {"v", 1},
                 {"scenario", scenario_.name},
                 {"poi", world_->graph.poi_id},
                 {"seed", scenario_.seed},
                 {"mode", kModes[static_cast<std::size_t>(scenario_.mode)]},
                 {"start", pose_json(scenario_.start)},
                 {"prefs", to_json(ctx_.prefs)},
                 {"t", now_}});
  ctx_.now = now_;
  const Goal& g = scenario_.goal;
  if (g.kind == Goal::Kind::Query) {
    auto ev = query(g.query);
    out.insert(out.end(), ev.begin(), ev.end());
  } else if (g.kind != Goal::Kind::None) {
    intent::Navigate nav;
    if (g.kind == Goal::Kind::Class) {
      nav.class_label = g.class_label;
    } else if (g.kind == Goal::Kind::Annotation) {
      nav.target = intent::Navigate::Target::Annotation;
      nav.annotation_id = g.annotation_id;
    } else {
      nav.target = intent::Navigate::Target::Point;
      nav.point = g.point;
    }
    AgentReply reply = dispatch(Intent{nav}, ctx_);
    reply.text = without_trailing_question(apply_verbosity(reply.text, ctx_.prefs.verbosity_words));
    auto ev = handle_reply(reply, "");
    out.insert(out.end(), ev.begin(), ev.end());
  }
  scan_annotations(out);
  sample(out, true);
  return out;
}

std::vector<json> Simulation::handle_reply(const AgentReply& reply, const std::string& q) {
  std::vector<json> out;
  json actions = json::array();
  for (const Action& a : reply.actions) {
    json brief = {{"kind", to_json(a).at("kind")}};
    if (a.kind == Action::Kind::AnnotationMutation) {
      brief["mutation"] = a.mutation;
      brief["id"] = a.record.id;
    }
    actions.push_back(brief);
  }
  out.push_back({{"type", "reply"}, {"query", q}, {"text", reply.text}, {"actions", actions},
                 {"t", now_}});
  for (const Action& a : reply.actions) {
    switch (a.kind) {
      case Action::Kind::StartNavigation:
        start_guidance(a.route, a.target_label, out);
        break;
      case Action::Kind::ApplyPrefs:
        if (guidance_) guidance_->set_prefs(ctx_.prefs);
        out.push_back({{"type", "prefs"}, {"prefs", to_json(ctx_.prefs)}, {"t", now_}});
        break;
      case Action::Kind::AnnotationMutation:
        out.push_back({{"type", "annotation_mutation"},
                       {"mutation", a.mutation},
                       {"record", to_json(a.record)},
                       {"t", now_}});
        break;
      case Action::Kind::Chime:
        out.push_back({{"type", "chime"}, {"t", now_}});
        break;
      case Action::Kind::Vibrate:
        out.push_back({{"type", "vibration"}, {"duration_s", a.duration_s}, {"t", now_}});
        break;
    }
  }
  return out;
}

void Simulation::start_guidance(const Route& route, const std::string& label, std::vector<json>& out) {
  auto started = GuidanceSession::start(route, ctx_.prefs, walker_.reported_pose, now_);
  guidance_.emplace(std::move(started.session));
  goal_point_ = route.waypoints.back();
  route_length_ = route.total_length_m;
  json r = to_json(route);
  r["type"] = "route";
  r["target"] = label;
  r["t"] = now_;
  out.push_back(std::move(r));
  out.push_back(to_json(started.event));
  last_events_ = {started.event};
  if (guidance_->state() == GuidanceState::Active) {
    const Point2 target = guidance_->current_target();
    last_compass_ = distance(walker_.reported_pose.position, target) < 1e-9
                        ? CompassSignal{CompassLevel::High, 0.0}
                        : compass(walker_.reported_pose, target, ctx_.prefs.compass_threshold_deg);
    json c = to_json(last_compass_);
    c["t"] = now_;
    out.push_back(c);
    logged_compass_ = last_compass_.level;
  }
}

void Simulation::scan_annotations(std::vector<json>& out) {
  const auto fired = triggers_.scan(world_->store, walker_.reported_pose,
                                    ctx_.prefs.category_prefs, now_);
  if (fired.empty()) return;
  for (const TriggerEvent& t : fired) out.push_back(to_json(t));
  for (const PlaybackDecision& d : channel_.enqueue(playback_items(fired), now_)) {
    const bool played = d.outcome == PlaybackDecision::Outcome::Played;
    if (played && d.item.kind == PlaybackItem::Kind::PromptAggregate) {
      out.push_back({{"type", "prompt"}, {"text", d.item.text}, {"chime", true},
                     {"ids", d.item.annotation_ids}, {"t", d.start_time}});
    }
    out.push_back(to_json(d));
    if (played && d.item.vibration_s > 0.0) {
      out.push_back({{"type", "vibration"}, {"duration_s", d.item.vibration_s},
                     {"id", d.item.annotation_ids.front()}, {"t", d.start_time}});
    }
  }
}

void Simulation::sample(std::vector<json>& out, bool force) {
  for (const SceneObject& o : world_->graph.objects) {
    if (o.box.distance_to(walker_.true_pose.position) > kLandmarkRadiusM) continue;
    if (std::find(seen_landmarks_.begin(), seen_landmarks_.end(), o.id) != seen_landmarks_.end()) continue;
    seen_landmarks_.push_back(o.id);
    out.push_back({{"type", "landmark"}, {"id", o.id}, {"class", o.class_label}, {"t", now_}});
  }
  if (force || now_ >= next_sample_ - 1e-9) {
    out.push_back({{"type", "pose"},
                   {"true", pose_json(walker_.true_pose)},
                   {"reported", pose_json(walker_.reported_pose)},
                   {"t", now_}});
    while (next_sample_ <= now_ + 1e-9) next_sample_ = snap_time(next_sample_ + 1.0);
  }
}

std::vector<json> Simulation::advance(Control control, double dt_s) {
  std::vector<json> out;
  if (!started_) out = start();
  if (done_) return out;
  walker_ = step(walker_, control, dt_s, &world_->grid);
  now_ = snap_time(now_ + dt_s);
  ctx_.now = now_;
  const Point2 off = drift_.offset_at(now_, dt_s, route_progress());
  walker_.reported_pose = {walker_.true_pose.position + off, walker_.true_pose.heading_deg};

  last_events_.clear();
  if (guidance_ && guidance_->state() == GuidanceState::Active) {
    TickResult tick = guidance_->tick(walker_.reported_pose, now_);
    for (const InstructionEvent& e : tick.events) out.push_back(to_json(e));
    if (!logged_compass_ || *logged_compass_ != tick.compass.level) {
      json c = to_json(tick.compass);
      c["t"] = now_;
      out.push_back(c);
      logged_compass_ = tick.compass.level;
    }
    last_events_ = tick.events;
    last_compass_ = tick.compass;
    if (tick.replan_requested && guidance_->state() == GuidanceState::Active) {
      try {
        Route r = plan_route(world_->graph, world_->grid, walker_.reported_pose,
                             guidance_->destination());
        route_length_ = r.total_length_m;
        json ev = to_json(r);
        ev["type"] = "replan";
        ev["t"] = now_;
        out.push_back(ev);
        InstructionEvent e = guidance_->replace_route(std::move(r), walker_.reported_pose, now_);
        out.push_back(to_json(e));
        last_events_.push_back(e);
      } catch (const Error& e) {
        out.push_back({{"type", "replan_failed"}, {"reason", e.what()}, {"t", now_}});
      }
    }
  }
  scan_annotations(out);
  sample(out, false);
  return out;
}

std::vector<json> Simulation::query(const std::string& text) {
  ctx_.now = now_;
  AgentReply reply = handle_query(text, ctx_);
  return handle_reply(reply, text);
}

std::vector<json> Simulation::set_prefs(const json& delta) {
  apply_prefs_delta(ctx_.prefs, delta);
  if (guidance_) guidance_->set_prefs(ctx_.prefs);
  return {{{"type", "prefs"}, {"prefs", to_json(ctx_.prefs)}, {"t", now_}}};
}

Control Simulation::next_control() {
  if (scenario_.mode == Scenario::Mode::Scripted) {
    while (script_pos_ + 1 < scenario_.script.size() &&
           scenario_.script[script_pos_ + 1].t <= now_ + 1e-9) {
      ++script_pos_;
    }
    if (scenario_.script.empty() || scenario_.script[script_pos_].t > now_ + 1e-9) return Control::Stop;
    return scenario_.script[script_pos_].control;
  }
  return autopilot_.decide(last_events_, last_compass_, walker_, kSimTickS);
}

std::vector<json> Simulation::finish(const std::string& reason) {
  std::vector<json> out;
  if (done_) return out;
  done_ = true;
  json end = {{"type", "end"},
              {"reason", reason},
              {"true", pose_json(walker_.true_pose)},
              {"reported", pose_json(walker_.reported_pose)},
              {"engine_arrived", guidance_ && guidance_->state() == GuidanceState::Arrived},
              {"t", now_}};
  if (goal_point_) {
    const double d = distance(walker_.true_pose.position, *goal_point_);
    end["goal"] = {goal_point_->x, goal_point_->y};
    end["true_goal_distance"] = d;
    end["success"] = d <= kSuccessRadiusM;
  } else {
    end["goal"] = nullptr;
    end["true_goal_distance"] = nullptr;
    end["success"] = false;
  }
  out.push_back(std::move(end));
  return out;
}

RunResult run_scenario(const Scenario& scenario, std::shared_ptr<World> world) {
  Simulation sim(scenario, std::move(world));
  std::vector<json> transcript = sim.start();
  auto append = [&](std::vector<json> ev) {
    transcript.insert(transcript.end(), std::make_move_iterator(ev.begin()),
                      std::make_move_iterator(ev.end()));
  };
  const bool scripted = scenario.mode == Scenario::Mode::Scripted;
  const double script_end = scenario.script.empty() ? 0.0 : scenario.script.back().t;
  const bool script_stops = !scenario.script.empty() && scenario.script.back().control == Control::Stop;
  std::string reason;
  if (sim.guidance() && sim.guidance()->state() == GuidanceState::Arrived) reason = "arrival";
  for (long k = 1; reason.empty(); ++k) {
    const Control c = sim.next_control();
    append(sim.advance(c, kSimTickS));
    if (sim.guidance() && sim.guidance()->state() == GuidanceState::Arrived) {
      reason = "arrival";
    } else if (!scripted && c == Control::Stop) {
      reason = "stopped";
    } else if (scripted && script_stops && sim.now() >= script_end - 1e-9) {
      reason = "stopped";
    } else if (sim.now() >= scenario.timeout_s - 1e-9) {
      reason = "timeout";
    }
    (void)k;
  }
  append(sim.finish(reason));
  RunResult result;
  result.report = report_from_transcript(transcript);
  result.transcript = std::move(transcript);
  return result;
}

RunResult run_scenario(const Scenario& scenario) {
  std::shared_ptr<World> world;
  try {
    world = load_world(scenario.poi_path, scenario.annotations_path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ScenarioLoadError, e.what());
  }
  return run_scenario(scenario, std::move(world));
}

std::string transcript_to_jsonl(const std::vector<json>& transcript) {
  std::string out;
  for (const json& e : transcript) {
    out += e.dump();
    out += '\n';
  }
  return out;
}

std::vector<json> parse_transcript(const std::string& jsonl) {
  std::vector<json> out;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!out.back().is_object() || !out.back().contains("type") || !out.back()["type"].is_string()) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(lineno) + ": missing type");
    }
  }
  return out;
}

RunReport report_from_transcript(const std::vector<json>& transcript) {
  RunReport r;
  if (transcript.empty()) return r;
  if (transcript.front().value("type", "") != "header") {
    throw Error(ErrorCode::SchemaError, "transcript does not start with a header");
  }
  const json& end = transcript.back();
  if (end.value("type", "") != "end") {
    throw Error(ErrorCode::SchemaError, "transcript truncated: missing end event");
  }
  std::set<std::string> landmarks;
  std::optional<Point2> last;
  auto walk_to = [&](const json& p) {
    const Point2 q{p.at("x").get<double>(), p.at("y").get<double>()};
    if (last) r.path_length_m += distance(*last, q);
    last = q;
  };
  try {
    for (const json& e : transcript) {
      const std::string type = e.at("type").get<std::string>();
      if (type == "header" || type == "end") continue;
      if (type == "instruction") {
        ++r.event_counts[e.at("kind").get<std::string>()];
      } else if (type == "playback") {
        ++r.event_counts["playback_" + e.at("outcome").get<std::string>()];
      } else {
        ++r.event_counts[type];
      }
      if (type == "annotation_trigger") r.triggers.push_back(e.at("id").get<std::string>());
      if (type == "landmark") landmarks.insert(e.at("class").get<std::string>());
      if (type == "pose") walk_to(e.at("true"));
    }
    walk_to(end.at("true"));
    r.elapsed_s = end.at("t").get<double>();
    r.end_reason = end.at("reason").get<std::string>();
    r.engine_arrived = end.at("engine_arrived").get<bool>();
    r.success = end.at("success").get<bool>();
    r.final_goal_distance_m =
        end.at("true_goal_distance").is_null() ? -1.0 : end.at("true_goal_distance").get<double>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaError, std::string("transcript: ") + ex.what());
  }
  r.landmarks.assign(landmarks.begin(), landmarks.end());
  return r;
}

RunReport replay(const std::string& transcript_path) {
  std::ifstream in(transcript_path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open transcript '" + transcript_path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return report_from_transcript(parse_transcript(buf.str()));
}

}  // namespace lastmeter
