#include "lastmeter/guidance.hpp"

#include <array>
#include <cmath>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {
    "turn", "confirm", "deviation", "distance_update", "arrival", "haptic_hint"};

constexpr double kTimeEps = 1e-9;

// Bearing that tolerates a pose sitting exactly on its target.
double safe_bearing(const Pose& pose, Point2 target) {
  return distance(pose.position, target) < 1e-9 ? 0.0 : relative_bearing(pose, target);
}

std::string direction_phrase(double rel_bearing, const UserPrefs& prefs, double heading_deg) {
  switch (prefs.direction_format) {
    case DirectionFormat::ClockFace:
      return std::to_string(to_clock_hour(rel_bearing)) + " o'clock";
    case DirectionFormat::Egocentric8:
      return "Turn " + std::string(to_egocentric(rel_bearing, 8));
    case DirectionFormat::EgocentricDegrees: {
      const double err = signed_bearing_error(rel_bearing);
      const long deg = static_cast<long>(round_half_away(std::abs(err) / 5.0)) * 5;
      if (deg == 0) return "Go straight";
      return std::string("Turn ") + (err < 0 ? "left" : "right") + " by " + std::to_string(deg) +
             " degrees";
    }
    case DirectionFormat::Cardinal:
      return "Facing " + std::string(cardinal_word(heading_deg)) + ". Head " +
             std::string(cardinal_word(heading_deg + rel_bearing));
  }
  return {};
}

std::string destination_phrase(double rel_bearing, const UserPrefs& prefs, double heading_deg) {
  switch (prefs.direction_format) {
    case DirectionFormat::ClockFace:
      return "Destination lies at " + std::to_string(to_clock_hour(rel_bearing)) + " o'clock";
    case DirectionFormat::Egocentric8:
      return "Destination lies " + std::string(to_egocentric(rel_bearing, 8));
    case DirectionFormat::EgocentricDegrees: {
      const double err = signed_bearing_error(rel_bearing);
      const long deg = static_cast<long>(round_half_away(std::abs(err) / 5.0)) * 5;
      if (deg == 0) return "Destination lies straight ahead";
      return "Destination lies " + std::to_string(deg) + " degrees " + (err < 0 ? "left" : "right");
    }
    case DirectionFormat::Cardinal:
      return "Destination lies to the " + std::string(cardinal_word(heading_deg + rel_bearing));
  }
  return {};
}

}  // namespace

std::string_view to_string(InstructionKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<InstructionKind> instruction_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<InstructionKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(GuidanceState s) {
  switch (s) {
    case GuidanceState::Active: return "active";
    case GuidanceState::Arrived: return "arrived";
    case GuidanceState::Aborted: return "aborted";
  }
  return "active";
}

CompassSignal compass(const Pose& pose, Point2 target, double aligned_threshold_deg) {
  const double b = relative_bearing(pose, target);
  const double err = std::min(b, 360.0 - b);
  return {err <= aligned_threshold_deg ? CompassLevel::High : CompassLevel::Low, b};
}

std::string render_instruction(InstructionKind kind, double rel_bearing, double distance_m,
                               const UserPrefs& prefs, double heading_deg,
                               const GuidanceConfig& config) {
  const std::string d = format_distance(distance_m, prefs.unit).text;
  switch (kind) {
    case InstructionKind::Turn:
      return direction_phrase(rel_bearing, prefs, heading_deg) + ", " + d;
    case InstructionKind::Confirm:
      return "Correct direction, " + d;
    case InstructionKind::Deviation: {
      const bool egocentric = prefs.direction_format == DirectionFormat::Egocentric8 ||
                              prefs.direction_format == DirectionFormat::EgocentricDegrees;
      if (egocentric && prefs.explicit_wrong_way &&
          std::abs(signed_bearing_error(rel_bearing)) > config.wrong_way_threshold_deg) {
        return "You are heading the wrong way. Turn around, " + d;
      }
      return "Off route. " + direction_phrase(rel_bearing, prefs, heading_deg) + ", " + d;
    }
    case InstructionKind::DistanceUpdate:
      return destination_phrase(rel_bearing, prefs, heading_deg) + ", " + d;
    case InstructionKind::Arrival:
      return "You have arrived at your destination.";
    case InstructionKind::HapticHint:
      return "Correct direction.";
  }
  return {};
}

std::string haptic_phrase(const HapticSegment& tag) {
  const std::string& what = tag.object_class.empty() ? tag.object_id : tag.object_class;
  return "Follow the edge of the " + what + " on your " + tag.side;
}

GuidanceSession::Started GuidanceSession::start(Route route, const UserPrefs& prefs,
                                                const Pose& pose, double now,
                                                const GuidanceConfig& config) {
  if (route.waypoints.size() < 2) throw Error(ErrorCode::EmptyRoute, "route has no waypoints");
  GuidanceSession s;
  s.route_ = std::move(route);
  s.prefs_ = prefs;
  s.config_ = config;
  s.last_confirm_time_ = now;
  s.last_distance_update_time_ = now;
  s.hint_given_.assign(s.route_.waypoints.size(), false);
  if (s.route_.is_trivial()) {
    s.state_ = GuidanceState::Arrived;
    InstructionEvent arrival = s.make_event(InstructionKind::Arrival, pose, s.destination(),
                                            distance(pose.position, s.destination()), now);
    return {std::move(s), std::move(arrival)};
  }
  InstructionEvent first = s.announce_segment(pose, now);
  return {std::move(s), std::move(first)};
}

InstructionEvent GuidanceSession::make_event(InstructionKind kind, const Pose& pose, Point2 target,
                                             double distance_m, double now) const {
  InstructionEvent e;
  e.kind = kind;
  e.rel_bearing = safe_bearing(pose, target);
  e.distance_m = distance_m;
  e.timestamp = now;
  e.text = render_instruction(kind, e.rel_bearing, distance_m, prefs_, pose.heading_deg, config_);
  return e;
}

InstructionEvent GuidanceSession::announce_segment(const Pose& pose, double now) {
  const Point2 target = current_target();
  InstructionEvent e =
      make_event(InstructionKind::Turn, pose, target, distance(pose.position, target), now);
  if (const HapticSegment* tag = route_.haptic_for(segment_)) {
    e.text += ". " + haptic_phrase(*tag);
  }
  return e;
}

double GuidanceSession::remaining_distance(Point2 p) const {
  double total = distance(p, current_target());
  for (std::size_t i = segment_ + 1; i + 1 < route_.waypoints.size(); ++i) {
    total += distance(route_.waypoints[i], route_.waypoints[i + 1]);
  }
  return total;
}

TickResult GuidanceSession::tick(const Pose& pose, double now) {
  if (state_ != GuidanceState::Active) {
    throw Error(ErrorCode::SessionNotActive, "guidance session is not active");
  }
  TickResult out;
  auto compute_compass = [&] {
    const Point2 target = current_target();
    if (distance(pose.position, target) < 1e-9) return CompassSignal{CompassLevel::High, 0.0};
    return compass(pose, target, prefs_.compass_threshold_deg);
  };

  const double to_destination = distance(pose.position, destination());
  if (to_destination <= config_.arrival_radius_m) {
    out.events.push_back(
        make_event(InstructionKind::Arrival, pose, destination(), to_destination, now));
    state_ = GuidanceState::Arrived;
    out.compass = compute_compass();
    return out;
  }

  const std::size_t last_segment = route_.waypoints.size() - 2;
  if (segment_ < last_segment &&
      distance(pose.position, current_target()) <= config_.waypoint_radius_m) {
    ++segment_;
    deviating_ = false;
    consecutive_deviations_ = 0;
    out.events.push_back(announce_segment(pose, now));
  }

  out.compass = compute_compass();

  const double lateral = distance_to_segment(pose.position, route_.waypoints[segment_],
                                             route_.waypoints[segment_ + 1]);
  if (lateral > config_.deviation_threshold_m) {
    if (!deviating_ || now - last_deviation_time_ >= config_.confirm_period_s - kTimeEps) {
      const Point2 target = current_target();
      out.events.push_back(make_event(InstructionKind::Deviation, pose, target,
                                      distance(pose.position, target), now));
      last_deviation_time_ = now;
      if (++consecutive_deviations_ >= config_.replan_after_deviations) {
        out.replan_requested = true;
        consecutive_deviations_ = 0;
      }
    }
    deviating_ = true;
  } else {
    deviating_ = false;
    consecutive_deviations_ = 0;
    if (now - last_confirm_time_ >= config_.confirm_period_s - kTimeEps &&
        out.compass.level == CompassLevel::High) {
      const Point2 target = current_target();
      out.events.push_back(make_event(InstructionKind::Confirm, pose, target,
                                      distance(pose.position, target), now));
      last_confirm_time_ = now;
      if (const HapticSegment* tag = route_.haptic_for(segment_); tag && !hint_given_[segment_]) {
        InstructionEvent hint = make_event(InstructionKind::HapticHint, pose, target,
                                           distance(pose.position, target), now);
        hint.text += " " + haptic_phrase(*tag);
        out.events.push_back(std::move(hint));
        hint_given_[segment_] = true;
      }
    }
  }

  if (now - last_distance_update_time_ >= config_.distance_update_period_s - kTimeEps) {
    out.events.push_back(make_event(InstructionKind::DistanceUpdate, pose, destination(),
                                    remaining_distance(pose.position), now));
    last_distance_update_time_ = now;
  }
  return out;
}

InstructionEvent GuidanceSession::replace_route(Route route, const Pose& pose, double now) {
  if (route.waypoints.size() < 2) throw Error(ErrorCode::EmptyRoute, "route has no waypoints");
  route_ = std::move(route);
  segment_ = 0;
  deviating_ = false;
  consecutive_deviations_ = 0;
  hint_given_.assign(route_.waypoints.size(), false);
  state_ = GuidanceState::Active;
  if (route_.is_trivial()) {
    state_ = GuidanceState::Arrived;
    return make_event(InstructionKind::Arrival, pose, destination(),
                      distance(pose.position, destination()), now);
  }
  return announce_segment(pose, now);
}

json to_json(const InstructionEvent& e) {
  return {{"type", "instruction"},  {"kind", to_string(e.kind)},   {"text", e.text},
          {"bearing", e.rel_bearing}, {"distance_m", e.distance_m}, {"t", e.timestamp}};
}

json to_json(const CompassSignal& c) {
  return {{"type", "compass"},
          {"level", c.level == CompassLevel::High ? "high" : "low"},
          {"bearing", c.rel_bearing_to_next}};
}

}  // namespace lastmeter
