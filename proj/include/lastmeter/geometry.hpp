#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace lastmeter {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kGeoWindowM = 5000.0;
inline constexpr double kMaxLocalExtentM = 10000.0;
inline constexpr double kDefaultStepLengthM = 0.76;
inline constexpr double kFeetPerMeter = 3.28084;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Meters east (x) and north (y) of the POI origin.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
  friend Point2 operator*(double s, Point2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(Point2 a, Point2 b) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

// Finite and inside the POI-local validity box.
bool is_valid_local(Point2 p);

// Shortest distance from p to the closed segment ab.
double distance_to_segment(Point2 p, Point2 a, Point2 b);

// Degrees clockwise from true north, normalized to [0, 360).
double normalize_deg(double deg);

// Maps a relative bearing in [0, 360) to a signed error in (-180, 180];
// negative is to the left.
double signed_bearing_error(double rel_bearing);

// Unit vector for a compass heading (0 = +y, 90 = +x).
Point2 heading_vector(double heading_deg);

// Compass bearing of `to` seen from `from`.
double absolute_bearing(Point2 from, Point2 to);

// Rounds half away from zero. Used for every user-facing rounding.
double round_half_away(double v);

struct Pose {
  Point2 position;
  double heading_deg = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct GeoAnchor {
  double origin_lat = 0.0;
  double origin_lon = 0.0;

  friend bool operator==(const GeoAnchor&, const GeoAnchor&) = default;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

// Footprint of a scene object. yaw is clockwise from north; half_w spans the
// box's local right axis, half_d its local forward axis.
struct OrientedBox {
  Point2 center;
  double yaw_deg = 0.0;
  double half_w = 0.5;
  double half_d = 0.5;

  Point2 right_axis() const;
  Point2 forward_axis() const;

  // Corners in counter-clockwise order.
  std::array<Point2, 4> corners() const;

  // Distance to the closest point of the closed footprint; 0 inside.
  double distance_to(Point2 p) const;
  Point2 closest_point(Point2 p) const;
  bool contains(Point2 p, double eps = 1e-9) const;

  friend bool operator==(const OrientedBox&, const OrientedBox&) = default;
};

enum class DirectionFormat { ClockFace, Egocentric8, EgocentricDegrees, Cardinal };

std::string_view to_string(DirectionFormat f);
DirectionFormat direction_format_from_string(std::string_view s);

struct DistanceUnit {
  enum class Kind { Meters, Feet, Steps };
  Kind kind = Kind::Meters;
  double step_length_m = kDefaultStepLengthM;

  friend bool operator==(const DistanceUnit&, const DistanceUnit&) = default;
};

std::string_view to_string(DistanceUnit::Kind k);
DistanceUnit::Kind distance_kind_from_string(std::string_view s);

struct RenderedDistance {
  std::string text;
  long value = 0;  // the integer spoken in `text`; 0 for "less than 1 ..."
};

// 0 = dead ahead, 90 = due right of the current heading.
double relative_bearing(const Pose& pose, Point2 target);

int to_clock_hour(double rel_bearing);

// sectors must be 4 or 8.
std::string_view to_egocentric(double rel_bearing, int sectors);

// 8-wind abbreviation ("N", "NE", ...).
std::string_view to_cardinal(double abs_heading);
// Spoken form of the same wind ("north", "north-east", ...).
std::string_view cardinal_word(double abs_heading);

RenderedDistance format_distance(double meters, const DistanceUnit& unit);

// Equirectangular projection about the anchor; valid within kGeoWindowM.
Point2 geo_to_local(const GeoAnchor& anchor, double lat, double lon);
LatLon local_to_geo(const GeoAnchor& anchor, Point2 p);

}  // namespace lastmeter
