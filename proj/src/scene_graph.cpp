#include "lastmeter/scene_graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

const SceneObject* SceneGraph::find(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

std::array<Point2, 2> SceneGraph::bounds() const {
  if (walkable.empty() || walkable.front().empty()) return {Point2{}, Point2{}};
  Point2 lo = walkable.front().front();
  Point2 hi = lo;
  for (const auto& p : walkable.front()) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  return {lo, hi};
}

bool SceneGraph::is_walkable_point(Point2 p) const {
  if (walkable.empty() || !point_in_polygon(p, walkable.front())) return false;
  for (std::size_t i = 1; i < walkable.size(); ++i) {
    if (point_in_polygon(p, walkable[i])) return false;
  }
  return true;
}

bool point_in_polygon(Point2 p, const Polygon& polygon) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

double signed_area(const Polygon& polygon) {
  double twice = 0.0;
  for (std::size_t i = 0, n = polygon.size(); i < n; ++i) {
    twice += cross(polygon[i], polygon[(i + 1) % n]);
  }
  return twice / 2.0;
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  if (std::abs(v) < 1e-12) return 0;
  return v > 0 ? 1 : -1;
}

bool on_segment(Point2 p, Point2 a, Point2 b) {
  return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12 &&
         std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

bool segments_intersect(Point2 a, Point2 b, Point2 c, Point2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(c, a, b)) return true;
  if (o2 == 0 && on_segment(d, a, b)) return true;
  if (o3 == 0 && on_segment(a, c, d)) return true;
  if (o4 == 0 && on_segment(b, c, d)) return true;
  return false;
}

}  // namespace

bool is_simple_polygon(const Polygon& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3 || std::abs(signed_area(polygon)) < 1e-12) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::SchemaError, path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing field");
  return *it;
}

double require_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema_error(path + "." + key, "expected a finite number");
  return d;
}

std::string require_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

Point2 parse_point(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    schema_error(path, "expected an [x, y] pair");
  }
  const Point2 p{v[0].get<double>(), v[1].get<double>()};
  if (!is_valid_local(p)) {
    throw Error(ErrorCode::GeometryError, path + ": coordinate outside the POI-local frame");
  }
  return p;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& path, const LoadOptions& options,
                std::vector<std::string>* warnings) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    if (options.strict) schema_error(path + "." + key, "unknown key");
    if (warnings) warnings->push_back(path + "." + key + ": unknown key ignored");
  }
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

SceneGraph load_poi(const json& document, const LoadOptions& options,
                    std::vector<std::string>* warnings) {
  const std::string root = "$";
  if (!document.is_object()) schema_error(root, "expected an object");
  check_keys(document, {"poi_id", "anchor", "walkable", "objects"}, root, options, warnings);

  SceneGraph graph;
  graph.poi_id = require_string(document, "poi_id", root);
  if (graph.poi_id.empty()) schema_error(root + ".poi_id", "must not be empty");

  const json& anchor = require(document, "anchor", root);
  if (!anchor.is_object()) schema_error(root + ".anchor", "expected an object");
  check_keys(anchor, {"lat", "lon"}, root + ".anchor", options, warnings);
  graph.anchor.origin_lat = require_number(anchor, "lat", root + ".anchor");
  graph.anchor.origin_lon = require_number(anchor, "lon", root + ".anchor");
  if (graph.anchor.origin_lat < -90.0 || graph.anchor.origin_lat > 90.0 ||
      graph.anchor.origin_lon < -180.0 || graph.anchor.origin_lon >= 180.0) {
    schema_error(root + ".anchor", "latitude/longitude out of range");
  }

  const json& walkable = require(document, "walkable", root);
  if (!walkable.is_array() || walkable.empty()) {
    schema_error(root + ".walkable", "expected a non-empty array of polygons");
  }
  for (std::size_t i = 0; i < walkable.size(); ++i) {
    const std::string path = root + ".walkable[" + std::to_string(i) + "]";
    if (!walkable[i].is_array()) schema_error(path, "expected an array of points");
    Polygon poly;
    for (std::size_t k = 0; k < walkable[i].size(); ++k) {
      poly.push_back(parse_point(walkable[i][k], path + "[" + std::to_string(k) + "]"));
    }
    if (!is_simple_polygon(poly)) {
      throw Error(ErrorCode::GeometryError, path + ": polygon is not simple");
    }
    if (i > 0) {
      for (const auto& p : poly) {
        if (!point_in_polygon(p, graph.walkable.front())) {
          throw Error(ErrorCode::GeometryError, path + ": hole lies outside the outer boundary");
        }
      }
    }
    graph.walkable.push_back(std::move(poly));
  }

  const json& objects = require(document, "objects", root);
  if (!objects.is_array()) schema_error(root + ".objects", "expected an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const std::string path = root + ".objects[" + std::to_string(i) + "]";
    const json& o = objects[i];
    if (!o.is_object()) schema_error(path, "expected an object");
    check_keys(o, {"id", "class", "aliases", "center", "yaw_deg", "half_w", "half_d"}, path,
               options, warnings);
    SceneObject obj;
    obj.id = require_string(o, "id", path);
    if (obj.id.empty()) schema_error(path + ".id", "must not be empty");
    obj.class_label = to_lower(require_string(o, "class", path));
    if (obj.class_label.empty()) schema_error(path + ".class", "must not be empty");
    if (auto it = o.find("aliases"); it != o.end()) {
      if (!it->is_array()) schema_error(path + ".aliases", "expected an array of strings");
      for (const auto& a : *it) {
        if (!a.is_string()) schema_error(path + ".aliases", "expected an array of strings");
        obj.aliases.push_back(to_lower(a.get<std::string>()));
      }
    }
    obj.box.center = parse_point(require(o, "center", path), path + ".center");
    obj.box.yaw_deg = o.contains("yaw_deg") ? require_number(o, "yaw_deg", path) : 0.0;
    obj.box.half_w = require_number(o, "half_w", path);
    obj.box.half_d = require_number(o, "half_d", path);
    if (!(obj.box.half_w > 0.0) || !(obj.box.half_d > 0.0)) {
      throw Error(ErrorCode::GeometryError, path + ": half extents must be positive");
    }
    if (!ids.insert(obj.id).second) {
      throw Error(ErrorCode::DuplicateId, path + ".id: duplicate object id '" + obj.id + "'");
    }
    graph.objects.push_back(std::move(obj));
  }
  return graph;
}

SceneGraph load_poi_file(const std::string& path, const LoadOptions& options,
                         std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open POI file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
  return load_poi(doc, options, warnings);
}

json to_json(const SceneGraph& graph) {
  json doc;
  doc["poi_id"] = graph.poi_id;
  doc["anchor"] = {{"lat", graph.anchor.origin_lat}, {"lon", graph.anchor.origin_lon}};
  json walkable = json::array();
  for (const auto& poly : graph.walkable) {
    json jp = json::array();
    for (const auto& p : poly) jp.push_back({p.x, p.y});
    walkable.push_back(std::move(jp));
  }
  doc["walkable"] = std::move(walkable);
  json objects = json::array();
  for (const auto& o : graph.objects) {
    objects.push_back({{"id", o.id},
                       {"class", o.class_label},
                       {"aliases", o.aliases},
                       {"center", {o.box.center.x, o.box.center.y}},
                       {"yaw_deg", o.box.yaw_deg},
                       {"half_w", o.box.half_w},
                       {"half_d", o.box.half_d}});
  }
  doc["objects"] = std::move(objects);
  return doc;
}

std::string normalize_phrase(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80 || c == '-' || c == '\'') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

namespace {

std::optional<std::string> exact_class(const std::string& q, const SceneGraph& graph) {
  for (const auto& o : graph.objects) {
    if (o.class_label == q) return o.class_label;
  }
  for (const auto& o : graph.objects) {
    for (const auto& a : o.aliases) {
      if (a == q) return o.class_label;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> resolve_class(std::string_view query, const SceneGraph& graph) {
  const std::string q = normalize_phrase(query);
  if (q.empty()) return std::nullopt;
  if (auto hit = exact_class(q, graph)) return hit;
  // Plural forms: "benches" -> "bench", "statues" -> "statue".
  for (std::string_view suffix : {"es", "s"}) {
    if (q.size() > suffix.size() + 1 && q.ends_with(suffix)) {
      if (auto hit = exact_class(q.substr(0, q.size() - suffix.size()), graph)) return hit;
    }
  }
  return std::nullopt;
}

std::vector<ObjectDistance> ranked_by_class(const Pose& pose, std::string_view class_label,
                                            const SceneGraph& graph) {
  std::vector<ObjectDistance> out;
  for (const auto& o : graph.objects) {
    if (o.class_label == class_label) out.push_back({&o, o.box.distance_to(pose.position)});
  }
  std::sort(out.begin(), out.end(), [](const ObjectDistance& a, const ObjectDistance& b) {
    if (std::abs(a.distance_m - b.distance_m) > 1e-9) return a.distance_m < b.distance_m;
    return a.object->id < b.object->id;
  });
  return out;
}

std::optional<ObjectDistance> nearest_by_class(const Pose& pose, std::string_view class_label,
                                               const SceneGraph& graph) {
  auto ranked = ranked_by_class(pose, class_label, graph);
  if (ranked.empty()) return std::nullopt;
  return ranked.front();
}

RelativeDescription describe_relative(const Pose& pose, const SceneObject& object) {
  RelativeDescription d;
  d.distance_m = object.box.distance_to(pose.position);
  Point2 target = d.distance_m > 1e-9 ? object.box.closest_point(pose.position) : object.box.center;
  d.rel_bearing = distance(pose.position, target) > 1e-9 ? relative_bearing(pose, target) : 0.0;
  d.side = std::string(to_egocentric(d.rel_bearing, 8));
  return d;
}

std::vector<NearbyObject> objects_within(const Pose& pose, double radius_m,
                                         const SceneGraph& graph) {
  std::vector<NearbyObject> out;
  if (!(radius_m > 0.0)) return out;
  for (const auto& o : graph.objects) {
    if (o.box.distance_to(pose.position) <= radius_m) {
      out.push_back({&o, describe_relative(pose, o)});
    }
  }
  std::sort(out.begin(), out.end(), [](const NearbyObject& a, const NearbyObject& b) {
    if (a.description.distance_m != b.description.distance_m) {
      return a.description.distance_m < b.description.distance_m;
    }
    return a.object->id < b.object->id;
  });
  return out;
}

bool contains(const SceneObject& outer, const SceneObject& inner) {
  for (const auto& c : inner.box.corners()) {
    if (!outer.box.contains(c)) return false;
  }
  return true;
}

std::array<Segment, 4> footprint_edges(const SceneObject& object) {
  const auto c = object.box.corners();
  return {Segment{c[0], c[1]}, Segment{c[1], c[2]}, Segment{c[2], c[3]}, Segment{c[3], c[0]}};
}

const SceneObject& outermost_container(const SceneObject& object, const SceneGraph& graph) {
  const SceneObject* best = &object;
  double best_area = object.box.half_w * object.box.half_d;
  for (const auto& o : graph.objects) {
    if (o.id == object.id || !contains(o, object)) continue;
    const double area = o.box.half_w * o.box.half_d;
    if (area > best_area || (area == best_area && o.id < best->id)) {
      best = &o;
      best_area = area;
    }
  }
  return *best;
}

}  // namespace lastmeter
