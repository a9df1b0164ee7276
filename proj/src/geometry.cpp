#include "lastmeter/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lastmeter/error.hpp"

namespace lastmeter {

bool is_valid_local(Point2 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) &&
         std::abs(p.x) <= kMaxLocalExtentM && std::abs(p.y) <= kMaxLocalExtentM;
}

double distance_to_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double normalize_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  // fmod of a tiny negative value can round up to exactly 360.
  if (r >= 360.0) r = 0.0;
  return r;
}

double signed_bearing_error(double rel_bearing) {
  const double b = normalize_deg(rel_bearing);
  return b > 180.0 ? b - 360.0 : b;
}

Point2 heading_vector(double heading_deg) {
  const double r = deg_to_rad(heading_deg);
  return {std::sin(r), std::cos(r)};
}

double absolute_bearing(Point2 from, Point2 to) {
  const Point2 d = to - from;
  return normalize_deg(rad_to_deg(std::atan2(d.x, d.y)));
}

double round_half_away(double v) { return std::round(v); }

Point2 OrientedBox::right_axis() const {
  const double r = deg_to_rad(yaw_deg);
  return {std::cos(r), -std::sin(r)};
}

Point2 OrientedBox::forward_axis() const { return heading_vector(yaw_deg); }

std::array<Point2, 4> OrientedBox::corners() const {
  const Point2 r = right_axis() * half_w;
  const Point2 f = forward_axis() * half_d;
  return {center + r - f, center + r + f, center - r + f, center - r - f};
}

double OrientedBox::distance_to(Point2 p) const {
  return distance(p, closest_point(p));
}

Point2 OrientedBox::closest_point(Point2 p) const {
  const Point2 r = right_axis();
  const Point2 f = forward_axis();
  const Point2 d = p - center;
  const double lx = std::clamp(dot(d, r), -half_w, half_w);
  const double ly = std::clamp(dot(d, f), -half_d, half_d);
  return center + r * lx + f * ly;
}

bool OrientedBox::contains(Point2 p, double eps) const {
  const Point2 d = p - center;
  return std::abs(dot(d, right_axis())) <= half_w + eps &&
         std::abs(dot(d, forward_axis())) <= half_d + eps;
}

std::string_view to_string(DirectionFormat f) {
  switch (f) {
    case DirectionFormat::ClockFace: return "clock_face";
    case DirectionFormat::Egocentric8: return "egocentric";
    case DirectionFormat::EgocentricDegrees: return "egocentric_degrees";
    case DirectionFormat::Cardinal: return "cardinal";
  }
  return "clock_face";
}

DirectionFormat direction_format_from_string(std::string_view s) {
  if (s == "clock_face") return DirectionFormat::ClockFace;
  if (s == "egocentric") return DirectionFormat::Egocentric8;
  if (s == "egocentric_degrees") return DirectionFormat::EgocentricDegrees;
  if (s == "cardinal") return DirectionFormat::Cardinal;
  throw Error(ErrorCode::InvalidArgument, "unknown direction format '" + std::string(s) + "'");
}

std::string_view to_string(DistanceUnit::Kind k) {
  switch (k) {
    case DistanceUnit::Kind::Meters: return "meters";
    case DistanceUnit::Kind::Feet: return "feet";
    case DistanceUnit::Kind::Steps: return "steps";
  }
  return "meters";
}

DistanceUnit::Kind distance_kind_from_string(std::string_view s) {
  if (s == "meters") return DistanceUnit::Kind::Meters;
  if (s == "feet") return DistanceUnit::Kind::Feet;
  if (s == "steps") return DistanceUnit::Kind::Steps;
  throw Error(ErrorCode::InvalidArgument, "unknown distance unit '" + std::string(s) + "'");
}

double relative_bearing(const Pose& pose, Point2 target) {
  if (distance(pose.position, target) < 1e-9) {
    throw Error(ErrorCode::ZeroDistance, "target coincides with pose position");
  }
  return normalize_deg(absolute_bearing(pose.position, target) - pose.heading_deg);
}

int to_clock_hour(double rel_bearing) {
  const int hour = static_cast<int>(round_half_away(normalize_deg(rel_bearing) / 30.0));
  return hour == 0 ? 12 : hour;
}

namespace {

constexpr std::array<std::string_view, 8> kEgocentric8 = {
    "forward", "forward-right", "right", "backward-right",
    "backward", "backward-left", "left", "forward-left"};
constexpr std::array<std::string_view, 4> kEgocentric4 = {"forward", "right", "backward", "left"};
constexpr std::array<std::string_view, 8> kWinds = {"N", "NE", "E", "SE", "S", "SW", "W", "NW"};
constexpr std::array<std::string_view, 8> kWindWords = {
    "north", "north-east", "east", "south-east", "south", "south-west", "west", "north-west"};

// Half-open sectors [center - width/2, center + width/2) with sector 0
// centered on 0 degrees.
std::size_t sector_index(double deg, int sectors) {
  const double width = 360.0 / sectors;
  const double shifted = normalize_deg(normalize_deg(deg) + width / 2.0);
  return static_cast<std::size_t>(std::floor(shifted / width)) % static_cast<std::size_t>(sectors);
}

}  // namespace

std::string_view to_egocentric(double rel_bearing, int sectors) {
  if (sectors == 8) return kEgocentric8[sector_index(rel_bearing, 8)];
  if (sectors == 4) return kEgocentric4[sector_index(rel_bearing, 4)];
  throw Error(ErrorCode::InvalidArgument, "egocentric sectors must be 4 or 8");
}

std::string_view to_cardinal(double abs_heading) { return kWinds[sector_index(abs_heading, 8)]; }

std::string_view cardinal_word(double abs_heading) {
  return kWindWords[sector_index(abs_heading, 8)];
}

RenderedDistance format_distance(double meters, const DistanceUnit& unit) {
  if (!(meters >= 0.0)) {
    throw Error(ErrorCode::NegativeDistance, "distance must be non-negative");
  }
  auto render = [](long n, std::string_view one, std::string_view many) {
    if (n == 0) return RenderedDistance{"less than 1 " + std::string(one), 0};
    if (n == 1) return RenderedDistance{"1 " + std::string(one), 1};
    return RenderedDistance{std::to_string(n) + " " + std::string(many), n};
  };
  switch (unit.kind) {
    case DistanceUnit::Kind::Meters:
      if (meters < 0.5) return render(0, "meter", "meters");
      return render(static_cast<long>(round_half_away(meters)), "meter", "meters");
    case DistanceUnit::Kind::Feet:
      return render(static_cast<long>(round_half_away(meters * kFeetPerMeter)), "foot", "feet");
    case DistanceUnit::Kind::Steps:
      if (!(unit.step_length_m > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "step length must be positive");
      }
      return render(static_cast<long>(round_half_away(meters / unit.step_length_m)), "step",
                    "steps");
  }
  return render(0, "meter", "meters");
}

namespace {

void check_anchor(const GeoAnchor& a) {
  if (!(a.origin_lat >= -90.0 && a.origin_lat <= 90.0) ||
      !(a.origin_lon >= -180.0 && a.origin_lon < 180.0)) {
    throw Error(ErrorCode::InvalidArgument, "geo anchor out of range");
  }
}

double wrap_lon(double lon) {
  double r = std::fmod(lon + 180.0, 360.0);
  if (r < 0.0) r += 360.0;
  return r - 180.0;
}

constexpr double kMetersPerDegree = kEarthRadiusM * kPi / 180.0;

}  // namespace

Point2 geo_to_local(const GeoAnchor& anchor, double lat, double lon) {
  check_anchor(anchor);
  const double dlon = wrap_lon(lon - anchor.origin_lon);
  const Point2 p{dlon * std::cos(deg_to_rad(anchor.origin_lat)) * kMetersPerDegree,
                 (lat - anchor.origin_lat) * kMetersPerDegree};
  if (!(p.norm() <= kGeoWindowM)) {
    throw Error(ErrorCode::OutOfWindow, "point lies outside the 5 km projection window");
  }
  return p;
}

LatLon local_to_geo(const GeoAnchor& anchor, Point2 p) {
  check_anchor(anchor);
  if (!(p.norm() <= kGeoWindowM)) {
    throw Error(ErrorCode::OutOfWindow, "point lies outside the 5 km projection window");
  }
  const double lat = anchor.origin_lat + p.y / kMetersPerDegree;
  const double lon =
      anchor.origin_lon + p.x / (std::cos(deg_to_rad(anchor.origin_lat)) * kMetersPerDegree);
  return {lat, wrap_lon(lon)};
}

}  // namespace lastmeter
