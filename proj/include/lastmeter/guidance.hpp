#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lastmeter/geometry.hpp"
#include "lastmeter/navgrid.hpp"
#include "lastmeter/prefs.hpp"

namespace lastmeter {

enum class InstructionKind { Turn, Confirm, Deviation, DistanceUpdate, Arrival, HapticHint };

std::string_view to_string(InstructionKind k);
std::optional<InstructionKind> instruction_kind_from_string(std::string_view s);

struct InstructionEvent {
  InstructionKind kind = InstructionKind::Turn;
  std::string text;
  double rel_bearing = 0.0;
  double distance_m = 0.0;
  double timestamp = 0.0;

  friend bool operator==(const InstructionEvent&, const InstructionEvent&) = default;
};

enum class CompassLevel { High, Low };

struct CompassSignal {
  CompassLevel level = CompassLevel::Low;
  double rel_bearing_to_next = 0.0;

  friend bool operator==(const CompassSignal&, const CompassSignal&) = default;
};

struct GuidanceConfig {
  double confirm_period_s = 10.0;
  double distance_update_period_s = 30.0;
  double arrival_radius_m = 1.0;
  double waypoint_radius_m = 1.0;
  double deviation_threshold_m = 2.0;
  int replan_after_deviations = 2;
  double wrong_way_threshold_deg = 135.0;
};

enum class GuidanceState { Active, Arrived, Aborted };

std::string_view to_string(GuidanceState s);

struct TickResult {
  std::vector<InstructionEvent> events;
  CompassSignal compass;
  bool replan_requested = false;
};

// Closed threshold: High iff the unsigned heading error is at most
// aligned_threshold_deg.
CompassSignal compass(const Pose& pose, Point2 target,
                      double aligned_threshold_deg = kDefaultCompassThresholdDeg);

// Renders one utterance in the user's direction format and unit. heading_deg
// is only consulted by the cardinal format.
std::string render_instruction(InstructionKind kind, double rel_bearing, double distance_m,
                               const UserPrefs& prefs, double heading_deg = 0.0,
                               const GuidanceConfig& config = {});

std::string haptic_phrase(const HapticSegment& tag);

class GuidanceSession {
 public:
  struct Started;

  // Starts guidance at segment 0. The returned event is a Turn toward
  // waypoint 1, or an immediate Arrival for a zero-length route.
  static Started start(Route route, const UserPrefs& prefs, const Pose& pose, double now,
                       const GuidanceConfig& config = {});

  TickResult tick(const Pose& pose, double now);

  // Swaps in a replanned route and announces its first segment.
  InstructionEvent replace_route(Route route, const Pose& pose, double now);

  void set_prefs(const UserPrefs& prefs) { prefs_ = prefs; }
  void abort() { state_ = GuidanceState::Aborted; }

  const Route& route() const { return route_; }
  const UserPrefs& prefs() const { return prefs_; }
  GuidanceState state() const { return state_; }
  std::size_t segment_index() const { return segment_; }
  Point2 current_target() const { return route_.waypoints[segment_ + 1]; }
  Point2 destination() const { return route_.waypoints.back(); }
  double last_confirm_time() const { return last_confirm_time_; }
  double last_distance_update_time() const { return last_distance_update_time_; }
  // Remaining along-route distance from `p` through the unvisited waypoints.
  double remaining_distance(Point2 p) const;

 private:
  GuidanceSession() = default;

  InstructionEvent make_event(InstructionKind kind, const Pose& pose, Point2 target,
                              double distance_m, double now) const;
  InstructionEvent announce_segment(const Pose& pose, double now);

  Route route_;
  UserPrefs prefs_;
  GuidanceConfig config_;
  std::size_t segment_ = 0;
  double last_confirm_time_ = 0.0;
  double last_distance_update_time_ = 0.0;
  double last_deviation_time_ = 0.0;
  bool deviating_ = false;
  int consecutive_deviations_ = 0;
  std::vector<bool> hint_given_;
  GuidanceState state_ = GuidanceState::Active;
};

struct GuidanceSession::Started {
  GuidanceSession session;
  InstructionEvent event;
};

nlohmann::json to_json(const InstructionEvent& e);
nlohmann::json to_json(const CompassSignal& c);

}  // namespace lastmeter
