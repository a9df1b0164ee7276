#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lastmeter/geometry.hpp"
#include "lastmeter/scene_graph.hpp"

namespace lastmeter {

inline constexpr double kDefaultResolutionM = 0.25;
inline constexpr double kDefaultClearanceM = 0.30;
inline constexpr std::size_t kMaxGridCells = 4'000'000;
inline constexpr double kSnapRadiusM = 2.0;

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(Cell, Cell) = default;
};

struct NavGrid {
  Point2 origin;  // lower-left corner of cell (0, 0)
  double resolution_m = kDefaultResolutionM;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> walkable;  // row-major, 1 = walkable

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.x);
  }
  Cell cell_at(std::size_t index) const {
    return {static_cast<int>(index % static_cast<std::size_t>(width)),
            static_cast<int>(index / static_cast<std::size_t>(width))};
  }
  bool is_walkable(Cell c) const { return in_bounds(c) && walkable[index(c)] != 0; }
  Point2 center(Cell c) const;
  bool contains_point(Point2 p) const;
  // Cell containing p (points on the far edge map to the last cell).
  Cell cell_of(Point2 p) const;
  bool is_walkable_point(Point2 p) const { return contains_point(p) && is_walkable(cell_of(p)); }
  std::size_t walkable_count() const;

  // Fully walkable grid, used by tests and synthetic planners.
  static NavGrid open(int width, int height, double resolution_m = 1.0, Point2 origin = {});
};

NavGrid build_grid(const SceneGraph& graph, double resolution_m = kDefaultResolutionM,
                   double clearance_m = kDefaultClearanceM);

// Exact path cost as counts of straight (1) and diagonal (sqrt 2) moves.
// Two optimal costs compare equal iff the counts match, since sqrt 2 is
// irrational.
struct PathCost {
  std::uint32_t straight = 0;
  std::uint32_t diagonal = 0;

  double value() const { return straight + diagonal * kSqrt2; }
  friend PathCost operator+(PathCost a, PathCost b) {
    return {a.straight + b.straight, a.diagonal + b.diagonal};
  }
  friend bool operator==(PathCost, PathCost) = default;
};

struct CellPath {
  std::vector<Cell> cells;
  PathCost cost;
};

// 8-connected A* without corner cutting, octile heuristic, ties broken by
// (f, h, cell index).
CellPath a_star(const NavGrid& grid, Cell start, Cell goal);

// Supercover traversal: true iff every cell touched by segment ab is
// walkable. Cells are closed squares, so passing exactly through a corner
// touches all four cells around it.
bool line_of_sight(const NavGrid& grid, Point2 a, Point2 b);

// String pulling over cell centers.
std::vector<Point2> smooth(const NavGrid& grid, const std::vector<Cell>& cell_path);
std::vector<Point2> smooth_points(const NavGrid& grid, const std::vector<Point2>& points);

struct HapticSegment {
  std::size_t segment_index = 0;
  std::string object_id;
  std::string object_class;
  std::string side;  // "left" | "right" of travel direction
  double gap_m = 0.0;

  friend bool operator==(const HapticSegment&, const HapticSegment&) = default;
};

struct HapticOptions {
  double max_gap_m = 1.0;
  double max_angle_deg = 15.0;
  double min_len_m = 2.0;
};

struct Route {
  std::vector<Point2> waypoints;
  std::vector<HapticSegment> haptic_segments;
  double total_length_m = 0.0;

  std::size_t turning_points() const {
    return waypoints.size() > 2 ? waypoints.size() - 2 : 0;
  }
  const HapticSegment* haptic_for(std::size_t segment) const;
  bool is_trivial() const { return total_length_m <= 0.0; }

  friend bool operator==(const Route&, const Route&) = default;
};

std::vector<HapticSegment> detect_haptic_segments(const Route& route, const SceneGraph& graph,
                                                  const HapticOptions& options = {});

std::optional<Cell> snap_to_walkable(const NavGrid& grid, Point2 p,
                                     double max_distance_m = kSnapRadiusM);

// build -> a_star -> smooth -> detect_haptic_segments on a prebuilt grid.
Route plan_route(const SceneGraph& graph, const NavGrid& grid, const Pose& from, Point2 to);

// Where to walk to reach an object: the closest footprint point of its
// outermost container (a statue inside a flower bed is reached at the bed).
Point2 approach_point(const SceneGraph& graph, const SceneObject& object, Point2 from);

double polyline_length(const std::vector<Point2>& points);

nlohmann::json to_json(const Route& route);
Route route_from_json(const nlohmann::json& doc);

}  // namespace lastmeter
