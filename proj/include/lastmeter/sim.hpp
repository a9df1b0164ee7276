#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lastmeter/annotations.hpp"
#include "lastmeter/guidance.hpp"
#include "lastmeter/navgrid.hpp"
#include "lastmeter/orchestrator.hpp"
#include "lastmeter/scene_graph.hpp"

namespace lastmeter {

inline constexpr double kSimTickS = 0.1;
inline constexpr double kSimTimeoutS = 600.0;
inline constexpr double kSuccessRadiusM = 1.0;
inline constexpr double kLandmarkRadiusM = 3.0;

enum class Control { Advance, TurnLeft, TurnRight, Stop };

std::string_view to_string(Control c);
std::optional<Control> control_from_string(std::string_view s);

struct WalkerState {
  Pose true_pose;
  Pose reported_pose;
  double speed_mps = 1.0;
  double turn_rate_dps = 90.0;
};

// Kinematic update of true_pose only. With a grid, forward motion stops at
// the last walkable point before a blocked cell.
WalkerState step(const WalkerState& state, Control control, double dt_s,
                 const NavGrid* grid = nullptr);

struct DriftModel {
  enum class Kind { None, Bias, RandomWalk };
  Kind kind = Kind::None;
  Point2 offset;                         // Bias
  double start_s = 0.0;                  // Bias: onset time
  std::optional<double> start_progress;  // Bias: onset as route fraction
  double sigma_m_per_sqrt_s = 0.0;       // RandomWalk
  std::uint64_t seed = 0;                // RandomWalk
};

// Stateful drift: reported = true + current offset.
class DriftProcess {
 public:
  explicit DriftProcess(const DriftModel& model);
  Point2 offset_at(double now, double dt_s, double route_progress);
  bool active() const { return active_; }

 private:
  double gaussian();

  DriftModel model_;
  std::mt19937_64 rng_;
  Point2 walk_;
  bool active_ = false;
  std::optional<double> spare_;
};

// Deterministic follower of the guidance stream.
class Autopilot {
 public:
  Control decide(const std::vector<InstructionEvent>& events, const CompassSignal& compass,
                 const WalkerState& state, double dt_s);
  bool stopped() const { return stopped_; }

 private:
  bool stopped_ = false;
  bool aligning_ = true;
};

struct Goal {
  enum class Kind { None, Class, Annotation, Point, Query };
  Kind kind = Kind::None;
  std::string class_label;
  std::string annotation_id;
  Point2 point;
  std::string query;
};

struct ScriptCommand {
  double t = 0.0;
  Control control = Control::Stop;
};

struct Scenario {
  std::string name;
  std::string poi_path;
  std::string annotations_path;
  Pose start;
  Goal goal;
  nlohmann::json prefs = nlohmann::json::object();
  DriftModel drift;
  enum class Mode { Autopilot, Scripted, Interactive };
  Mode mode = Mode::Autopilot;
  std::vector<ScriptCommand> script;
  std::uint64_t seed = 0;
  double speed_mps = 1.0;
  double turn_rate_dps = 90.0;
  double timeout_s = kSimTimeoutS;
  std::string user_id = "walker";
};

// Relative file paths resolve against the scenario file's directory.
Scenario load_scenario(const std::string& path);
Scenario scenario_from_json(const nlohmann::json& doc, const std::string& base_dir);

// Immutable POI data plus the shared annotation store.
struct World {
  SceneGraph graph;
  NavGrid grid;
  AnnotationStore store{&graph};

  World() = default;
  World(const World&) = delete;
  World& operator=(const World&) = delete;
};

std::shared_ptr<World> load_world(const std::string& poi_path,
                                  const std::string& annotations_path = {});

struct RunReport {
  bool success = false;
  bool engine_arrived = false;
  std::string end_reason;
  double elapsed_s = 0.0;
  double path_length_m = 0.0;  // over the 1 Hz true-pose samples
  double final_goal_distance_m = 0.0;
  std::map<std::string, int> event_counts;
  std::vector<std::string> triggers;
  std::vector<std::string> landmarks;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

nlohmann::json to_json(const RunReport& r);

// One walker wired to guidance, triggers, playback and the orchestrator.
// Every call returns the transcript events it produced, in order.
class Simulation {
 public:
  Simulation(const Scenario& scenario, std::shared_ptr<World> world);

  std::vector<nlohmann::json> start();
  std::vector<nlohmann::json> advance(Control control, double dt_s);
  std::vector<nlohmann::json> query(const std::string& text);
  std::vector<nlohmann::json> set_prefs(const nlohmann::json& delta);
  std::vector<nlohmann::json> finish(const std::string& reason);

  // Next control from the autopilot or the script at the current time.
  Control next_control();
  bool done() const { return done_; }
  double now() const { return now_; }
  const WalkerState& walker() const { return walker_; }
  SessionContext& context() { return ctx_; }
  const std::optional<GuidanceSession>& guidance() const { return guidance_; }
  std::optional<Point2> goal_point() const { return goal_point_; }
  const CompassSignal& last_compass() const { return last_compass_; }

 private:
  std::vector<nlohmann::json> handle_reply(const AgentReply& reply, const std::string& query);
  void start_guidance(const Route& route, const std::string& label,
                      std::vector<nlohmann::json>& out);
  void scan_annotations(std::vector<nlohmann::json>& out);
  void sample(std::vector<nlohmann::json>& out, bool force);
  double route_progress() const;
  nlohmann::json pose_json(const Pose& p) const;

  Scenario scenario_;
  std::shared_ptr<World> world_;
  SessionContext ctx_;
  WalkerState walker_;
  DriftProcess drift_;
  Autopilot autopilot_;
  TriggerEngine triggers_;
  PlaybackChannel channel_;
  std::optional<GuidanceSession> guidance_;
  std::optional<Point2> goal_point_;
  double route_length_ = 0.0;
  std::vector<InstructionEvent> last_events_;
  CompassSignal last_compass_;
  std::optional<CompassLevel> logged_compass_;
  std::vector<std::string> seen_landmarks_;
  double now_ = 0.0;
  double next_sample_ = 0.0;
  std::size_t script_pos_ = 0;
  bool done_ = false;
  bool started_ = false;
};

struct RunResult {
  RunReport report;
  std::vector<nlohmann::json> transcript;
};

RunResult run_scenario(const Scenario& scenario);
RunResult run_scenario(const Scenario& scenario, std::shared_ptr<World> world);

// JSON Lines with sorted keys, one event per line.
std::string transcript_to_jsonl(const std::vector<nlohmann::json>& transcript);
std::vector<nlohmann::json> parse_transcript(const std::string& jsonl);

RunReport report_from_transcript(const std::vector<nlohmann::json>& transcript);
RunReport replay(const std::string& transcript_path);

}  // namespace lastmeter
