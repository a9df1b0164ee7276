#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lastmeter/geometry.hpp"

namespace lastmeter {

struct SceneObject {
  std::string id;
  std::string class_label;
  OrientedBox box;
  std::vector<std::string> aliases;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

using Polygon = std::vector<Point2>;

struct SceneGraph {
  std::string poi_id;
  std::vector<SceneObject> objects;
  // walkable[0] is the outer boundary; any further polygons are holes.
  std::vector<Polygon> walkable;
  GeoAnchor anchor;

  const SceneObject* find(std::string_view id) const;
  // Axis-aligned bounds of the outer boundary as {min, max}.
  std::array<Point2, 2> bounds() const;
  bool is_walkable_point(Point2 p) const;

  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct RelativeDescription {
  double rel_bearing = 0.0;
  double distance_m = 0.0;
  std::string side;
};

struct ObjectDistance {
  const SceneObject* object = nullptr;
  double distance_m = 0.0;
};

struct NearbyObject {
  const SceneObject* object = nullptr;
  RelativeDescription description;
};

struct LoadOptions {
  // Reject unknown keys instead of collecting warnings.
  bool strict = false;
};

// Parses and validates a POI document. Warnings for ignored keys are
// appended to `warnings` when provided.
SceneGraph load_poi(const nlohmann::json& document, const LoadOptions& options = {},
                    std::vector<std::string>* warnings = nullptr);
SceneGraph load_poi_file(const std::string& path, const LoadOptions& options = {},
                         std::vector<std::string>* warnings = nullptr);
nlohmann::json to_json(const SceneGraph& graph);

bool point_in_polygon(Point2 p, const Polygon& polygon);
bool is_simple_polygon(const Polygon& polygon);
double signed_area(const Polygon& polygon);

// Case-insensitive lookup against class labels and aliases; returns the
// canonical class label.
std::optional<std::string> resolve_class(std::string_view query, const SceneGraph& graph);

std::optional<ObjectDistance> nearest_by_class(const Pose& pose, std::string_view class_label,
                                               const SceneGraph& graph);
// All instances of a class sorted by (boundary distance, id).
std::vector<ObjectDistance> ranked_by_class(const Pose& pose, std::string_view class_label,
                                            const SceneGraph& graph);

std::vector<NearbyObject> objects_within(const Pose& pose, double radius_m,
                                         const SceneGraph& graph);

RelativeDescription describe_relative(const Pose& pose, const SceneObject& object);

// True iff every footprint corner of `inner` lies in `outer`'s footprint.
bool contains(const SceneObject& outer, const SceneObject& inner);

struct Segment {
  Point2 a;
  Point2 b;
};

// World-frame footprint edges, counter-clockwise.
std::array<Segment, 4> footprint_edges(const SceneObject& object);

// Outermost object whose footprint contains `object` (itself if none).
const SceneObject& outermost_container(const SceneObject& object, const SceneGraph& graph);

std::string normalize_phrase(std::string_view text);

}  // namespace lastmeter
