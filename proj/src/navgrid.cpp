#include "lastmeter/navgrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

Point2 NavGrid::center(Cell c) const {
  return {origin.x + (c.x + 0.5) * resolution_m, origin.y + (c.y + 0.5) * resolution_m};
}

bool NavGrid::contains_point(Point2 p) const {
  return p.x >= origin.x && p.y >= origin.y && p.x <= origin.x + width * resolution_m &&
         p.y <= origin.y + height * resolution_m;
}

Cell NavGrid::cell_of(Point2 p) const {
  const int cx = static_cast<int>(std::floor((p.x - origin.x) / resolution_m));
  const int cy = static_cast<int>(std::floor((p.y - origin.y) / resolution_m));
  return {std::clamp(cx, 0, std::max(0, width - 1)), std::clamp(cy, 0, std::max(0, height - 1))};
}

std::size_t NavGrid::walkable_count() const {
  return static_cast<std::size_t>(std::count(walkable.begin(), walkable.end(), std::uint8_t{1}));
}

NavGrid NavGrid::open(int width, int height, double resolution_m, Point2 origin) {
  NavGrid g;
  g.origin = origin;
  g.resolution_m = resolution_m;
  g.width = width;
  g.height = height;
  g.walkable.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 1);
  return g;
}

NavGrid build_grid(const SceneGraph& graph, double resolution_m, double clearance_m) {
  if (!(resolution_m >= 0.05 && resolution_m <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid resolution must lie in [0.05, 1.0] m");
  }
  if (!(clearance_m >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "clearance must be non-negative");
  }
  const auto [lo, hi] = graph.bounds();
  NavGrid grid;
  grid.origin = lo;
  grid.resolution_m = resolution_m;
  const double w = std::ceil((hi.x - lo.x) / resolution_m - 1e-9);
  const double h = std::ceil((hi.y - lo.y) / resolution_m - 1e-9);
  if (w * h > static_cast<double>(kMaxGridCells)) {
    throw Error(ErrorCode::GridTooLarge, "grid would need more than 4 000 000 cells");
  }
  grid.width = std::max(1, static_cast<int>(w));
  grid.height = std::max(1, static_cast<int>(h));
  grid.walkable.assign(static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height),
                       0);

  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (graph.is_walkable_point(grid.center({x, y}))) grid.walkable[grid.index({x, y})] = 1;
    }
  }

  // Carve clearance-inflated footprints, visiting only cells in each
  // object's inflated bounding square.
  for (const auto& o : graph.objects) {
    const double reach = std::hypot(o.box.half_w, o.box.half_d) + clearance_m;
    const Cell c0 = grid.cell_of(o.box.center - Point2{reach, reach});
    const Cell c1 = grid.cell_of(o.box.center + Point2{reach, reach});
    for (int y = c0.y; y <= c1.y; ++y) {
      for (int x = c0.x; x <= c1.x; ++x) {
        if (o.box.distance_to(grid.center({x, y})) <= clearance_m) {
          grid.walkable[grid.index({x, y})] = 0;
        }
      }
    }
  }
  return grid;
}

namespace {

constexpr std::array<std::array<int, 2>, 8> kMoves = {
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

PathCost octile(Cell a, Cell b) {
  const auto dx = static_cast<std::uint32_t>(std::abs(a.x - b.x));
  const auto dy = static_cast<std::uint32_t>(std::abs(a.y - b.y));
  const std::uint32_t diag = std::min(dx, dy);
  return {std::max(dx, dy) - diag, diag};
}

}  // namespace

CellPath a_star(const NavGrid& grid, Cell start, Cell goal) {
  if (!grid.is_walkable(start) || !grid.is_walkable(goal)) {
    throw Error(ErrorCode::UnwalkableEndpoint, "start or goal cell is not walkable");
  }
  const std::size_t n = grid.walkable.size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<PathCost> g(n);
  std::vector<std::size_t> parent(n, kNone);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint8_t> closed(n, 0);

  struct Entry {
    double f;
    double h;
    std::size_t index;
  };
  auto worse = [](const Entry& a, const Entry& b) {
    return std::tie(a.f, a.h, a.index) > std::tie(b.f, b.h, b.index);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> open(worse);

  const std::size_t start_i = grid.index(start);
  const std::size_t goal_i = grid.index(goal);
  seen[start_i] = 1;
  {
    const double h = octile(start, goal).value();
    open.push({h, h, start_i});
  }

  while (!open.empty()) {
    const Entry e = open.top();
    open.pop();
    if (closed[e.index]) continue;
    closed[e.index] = 1;
    if (e.index == goal_i) break;
    const Cell c = grid.cell_at(e.index);
    for (const auto& [mx, my] : kMoves) {
      const Cell nb{c.x + mx, c.y + my};
      if (!grid.is_walkable(nb)) continue;
      const bool diagonal = mx != 0 && my != 0;
      if (diagonal && (!grid.is_walkable({c.x + mx, c.y}) || !grid.is_walkable({c.x, c.y + my}))) {
        continue;
      }
      const std::size_t ni = grid.index(nb);
      if (closed[ni]) continue;
      const PathCost cand = g[e.index] + (diagonal ? PathCost{0, 1} : PathCost{1, 0});
      if (!seen[ni] || cand.value() < g[ni].value()) {
        seen[ni] = 1;
        g[ni] = cand;
        parent[ni] = e.index;
        const double h = octile(nb, goal).value();
        open.push({cand.value() + h, h, ni});
      }
    }
  }

  if (!closed[goal_i]) throw Error(ErrorCode::NoPath, "no walkable path between the cells");

  CellPath path;
  path.cost = g[goal_i];
  for (std::size_t i = goal_i; i != kNone; i = parent[i]) path.cells.push_back(grid.cell_at(i));
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

bool line_of_sight(const NavGrid& grid, Point2 a, Point2 b) {
  if (!grid.contains_point(a) || !grid.contains_point(b)) {
    throw Error(ErrorCode::OutOfBounds, "line-of-sight endpoint outside the grid");
  }
  const double x0 = (a.x - grid.origin.x) / grid.resolution_m;
  const double y0 = (a.y - grid.origin.y) / grid.resolution_m;
  const double x1 = (b.x - grid.origin.x) / grid.resolution_m;
  const double y1 = (b.y - grid.origin.y) / grid.resolution_m;
  Cell c = grid.cell_of(a);
  const Cell end = grid.cell_of(b);
  if (!grid.is_walkable(c)) return false;

  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double step_tx = sx != 0 ? 1.0 / std::abs(dx) : kInf;
  const double step_ty = sy != 0 ? 1.0 / std::abs(dy) : kInf;
  double next_tx = sx > 0 ? (c.x + 1 - x0) / dx : (sx < 0 ? (x0 - c.x) / -dx : kInf);
  double next_ty = sy > 0 ? (c.y + 1 - y0) / dy : (sy < 0 ? (y0 - c.y) / -dy : kInf);

  constexpr double kCornerEps = 1e-9;
  int guard = std::abs(end.x - c.x) + std::abs(end.y - c.y) + 4;
  while (!(c == end) && guard-- > 0) {
    if (std::abs(next_tx - next_ty) <= kCornerEps) {
      if (!grid.is_walkable({c.x + sx, c.y}) || !grid.is_walkable({c.x, c.y + sy})) return false;
      c = {c.x + sx, c.y + sy};
      next_tx += step_tx;
      next_ty += step_ty;
    } else if (next_tx < next_ty) {
      c.x += sx;
      next_tx += step_tx;
    } else {
      c.y += sy;
      next_ty += step_ty;
    }
    if (!grid.is_walkable(c)) return false;
  }
  return true;
}

double polyline_length(const std::vector<Point2>& points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

std::vector<Point2> smooth_points(const NavGrid& grid, const std::vector<Point2>& points) {
  if (points.size() <= 2) return points;
  std::vector<Point2> out{points.front()};
  std::size_t anchor = 0;
  while (anchor + 1 < points.size()) {
    std::size_t next = anchor + 1;
    for (std::size_t j = points.size() - 1; j > anchor + 1; --j) {
      if (line_of_sight(grid, points[anchor], points[j])) {
        next = j;
        break;
      }
    }
    out.push_back(points[next]);
    anchor = next;
  }
  // Drop interior points that are collinear with their neighbours.
  std::vector<Point2> pruned{out.front()};
  for (std::size_t i = 1; i + 1 < out.size(); ++i) {
    const Point2 u = out[i] - pruned.back();
    const Point2 v = out[i + 1] - out[i];
    const bool collinear = std::abs(cross(u, v)) <= 1e-9 * u.norm() * v.norm() && dot(u, v) > 0;
    if (!collinear) pruned.push_back(out[i]);
  }
  pruned.push_back(out.back());
  return pruned;
}

std::vector<Point2> smooth(const NavGrid& grid, const std::vector<Cell>& cell_path) {
  std::vector<Point2> centers;
  centers.reserve(cell_path.size());
  for (const auto& c : cell_path) centers.push_back(grid.center(c));
  if (centers.size() == 1) return centers;
  return smooth_points(grid, centers);
}

const HapticSegment* Route::haptic_for(std::size_t segment) const {
  const HapticSegment* best = nullptr;
  for (const auto& h : haptic_segments) {
    if (h.segment_index == segment && (best == nullptr || h.gap_m < best->gap_m)) best = &h;
  }
  return best;
}

std::vector<HapticSegment> detect_haptic_segments(const Route& route, const SceneGraph& graph,
                                                  const HapticOptions& options) {
  std::vector<HapticSegment> out;
  const double cos_limit = std::cos(deg_to_rad(options.max_angle_deg));
  for (std::size_t s = 0; s + 1 < route.waypoints.size(); ++s) {
    const Point2 a = route.waypoints[s];
    const Point2 b = route.waypoints[s + 1];
    const double len = distance(a, b);
    if (len < 1e-9) continue;
    const Point2 u = (b - a) * (1.0 / len);
    const Point2 left{-u.y, u.x};
    for (const auto& o : graph.objects) {
      std::optional<HapticSegment> best;
      for (const auto& e : footprint_edges(o)) {
        const double elen = distance(e.a, e.b);
        if (elen < 1e-9) continue;
        const Point2 ev = (e.b - e.a) * (1.0 / elen);
        if (std::abs(dot(u, ev)) < cos_limit) continue;
        const double ta = dot(e.a - a, u);
        const double tb = dot(e.b - a, u);
        const double lo = std::max(0.0, std::min(ta, tb));
        const double hi = std::min(len, std::max(ta, tb));
        if (hi - lo < options.min_len_m) continue;
        // Lateral offset of the edge at the middle of the overlap.
        const double tm = (lo + hi) / 2.0;
        const double frac = (tm - ta) / (tb - ta);
        const Point2 on_edge = e.a + (e.b - e.a) * frac;
        const double lateral = dot(on_edge - a, left);
        if (std::abs(lateral) > options.max_gap_m) continue;
        HapticSegment tag{s, o.id, o.class_label, lateral > 0 ? "left" : "right",
                          std::abs(lateral)};
        if (!best || tag.gap_m < best->gap_m) best = tag;
      }
      if (best) out.push_back(*best);
    }
  }
  return out;
}

std::optional<Cell> snap_to_walkable(const NavGrid& grid, Point2 p, double max_distance_m) {
  if (grid.contains_point(p) && grid.is_walkable(grid.cell_of(p))) return grid.cell_of(p);
  const int reach = static_cast<int>(std::ceil(max_distance_m / grid.resolution_m)) + 1;
  const int px = static_cast<int>(std::floor((p.x - grid.origin.x) / grid.resolution_m));
  const int py = static_cast<int>(std::floor((p.y - grid.origin.y) / grid.resolution_m));
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int y = py - reach; y <= py + reach; ++y) {
    for (int x = px - reach; x <= px + reach; ++x) {
      const Cell c{x, y};
      if (!grid.is_walkable(c)) continue;
      const double d = distance(grid.center(c), p);
      if (d > max_distance_m) continue;
      if (d < best_d || (d == best_d && grid.index(c) < grid.index(*best))) {
        best = c;
        best_d = d;
      }
    }
  }
  return best;
}

Route plan_route(const SceneGraph& graph, const NavGrid& grid, const Pose& from, Point2 to) {
  Route route;
  if (distance(from.position, to) < 1e-9) {
    route.waypoints = {from.position, to};
    return route;
  }
  const auto start = snap_to_walkable(grid, from.position);
  if (!start) throw Error(ErrorCode::NoPath, "start position is not near any walkable cell");
  const auto goal = snap_to_walkable(grid, to);
  if (!goal) {
    throw Error(ErrorCode::UnreachableDestination,
                "destination has no walkable cell within 2 m");
  }
  const CellPath path = a_star(grid, *start, *goal);

  auto exact_or_center = [&](Point2 p, Cell c) {
    return grid.is_walkable_point(p) && grid.cell_of(p) == c ? p : grid.center(c);
  };
  std::vector<Point2> points{exact_or_center(from.position, *start)};
  for (std::size_t i = 1; i + 1 < path.cells.size(); ++i) {
    points.push_back(grid.center(path.cells[i]));
  }
  points.push_back(exact_or_center(to, *goal));

  std::vector<Point2> smoothed = smooth_points(grid, points);
  std::vector<Point2> dedup;
  for (const auto& p : smoothed) {
    if (dedup.empty() || distance(dedup.back(), p) > 1e-9) dedup.push_back(p);
  }
  if (dedup.size() < 2) {
    route.waypoints = {dedup.front(), dedup.front()};
    return route;
  }
  route.waypoints = std::move(dedup);
  route.total_length_m = polyline_length(route.waypoints);
  route.haptic_segments = detect_haptic_segments(route, graph);
  return route;
}

Point2 approach_point(const SceneGraph& graph, const SceneObject& object, Point2 from) {
  const SceneObject& target = outermost_container(object, graph);
  return target.box.closest_point(from);
}

json to_json(const Route& route) {
  json wp = json::array();
  for (const auto& p : route.waypoints) wp.push_back({p.x, p.y});
  json hs = json::array();
  for (const auto& h : route.haptic_segments) {
    hs.push_back({{"segment_index", h.segment_index},
                  {"object_id", h.object_id},
                  {"object_class", h.object_class},
                  {"side", h.side},
                  {"gap_m", h.gap_m}});
  }
  return {{"waypoints", wp}, {"haptic_segments", hs}, {"total_length_m", route.total_length_m}};
}

Route route_from_json(const json& doc) {
  Route r;
  try {
    for (const auto& p : doc.at("waypoints")) r.waypoints.push_back({p.at(0), p.at(1)});
    for (const auto& h : doc.at("haptic_segments")) {
      r.haptic_segments.push_back({h.at("segment_index").get<std::size_t>(),
                                   h.at("object_id").get<std::string>(),
                                   h.value("object_class", std::string()),
                                   h.at("side").get<std::string>(), h.value("gap_m", 0.0)});
    }
    r.total_length_m = doc.at("total_length_m").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("route: ") + e.what());
  }
  return r;
}

}  // namespace lastmeter
