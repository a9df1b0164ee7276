#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "lastmeter/error.hpp"
#include "lastmeter/scene_graph.hpp"
#include "test_support.hpp"

using namespace lastmeter;
using lastmeter::test::fixture;
using nlohmann::json;

namespace {

json square_doc(double half = 10.0) {
  return {{"poi_id", "test"},
          {"anchor", {{"lat", 51.0}, {"lon", 0.0}}},
          {"walkable", json::array({json::array({{-half, -half}, {half, -half}, {half, half}, {-half, half}})})},
          {"objects", json::array()}};
}

json box_json(const std::string& id, const std::string& cls, Point2 c, double hw, double hd,
              double yaw = 0.0) {
  return {{"id", id}, {"class", cls}, {"aliases", json::array()}, {"center", {c.x, c.y}},
          {"yaw_deg", yaw}, {"half_w", hw}, {"half_d", hd}};
}

ErrorCode load_error(const json& doc, LoadOptions opt = {}) {
  try {
    load_poi(doc, opt);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a load error");
  return ErrorCode::InvalidArgument;
}

SceneObject make_obj(std::string id, Point2 c, double hw, double hd, double yaw) {
  SceneObject o;
  o.id = std::move(id);
  o.class_label = "thing";
  o.box.center = c;
  o.box.half_w = hw;
  o.box.half_d = hd;
  o.box.yaw_deg = yaw;
  return o;
}

}  // namespace

TEST_SUITE("scene_graph") {
  TEST_CASE("fixture class counts") {
    const SceneGraph& g = fixture().graph;
    std::map<std::string, int> counts;
    for (const auto& o : g.objects) ++counts[o.class_label];
    CHECK(counts["bench"] == 20);
    CHECK(counts["trash bin"] == 26);
    CHECK(counts["stairs"] == 2);
    CHECK(counts["ramp"] == 1);
    CHECK(counts["podium"] == 6);
    CHECK(counts["flower bed"] == 3);
    CHECK(counts["table tennis table"] == 2);
    CHECK(counts["notice board"] == 3);
    CHECK(counts["statue"] == 1);
    CHECK(counts.size() == 9);
    CHECK(g.objects.size() == 64);
    CHECK(g.poi_id == "golden_square");
  }

  TEST_CASE("degenerate and invalid documents") {
    CHECK(load_poi(square_doc()).objects.empty());

    json dup = square_doc();
    dup["objects"] = {box_json("a", "bench", {0, 0}, 1, 1), box_json("a", "bench", {3, 3}, 1, 1)};
    CHECK(load_error(dup) == ErrorCode::DuplicateId);

    json missing = square_doc();
    missing.erase("walkable");
    CHECK(load_error(missing) == ErrorCode::SchemaError);

    json bad_extent = square_doc();
    bad_extent["objects"] = {box_json("a", "bench", {0, 0}, 0.0, 1)};
    CHECK(load_error(bad_extent) == ErrorCode::GeometryError);

    json bowtie = square_doc();
    bowtie["walkable"] = {{{0, 0}, {4, 4}, {4, 0}, {0, 4}}};
    CHECK(load_error(bowtie) == ErrorCode::GeometryError);

    json extra = square_doc();
    extra["colour"] = "green";
    std::vector<std::string> warnings;
    CHECK_NOTHROW(load_poi(extra, {}, &warnings));
    CHECK(warnings.size() == 1);
    CHECK(load_error(extra, {true}) == ErrorCode::SchemaError);
  }

  TEST_CASE("schema errors name the field path") {
    json doc = square_doc();
    doc["objects"] = {box_json("a", "bench", {0, 0}, 1, 1)};
    doc["objects"][0].erase("half_d");
    try {
      load_poi(doc);
      FAIL("expected SchemaError");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("objects[0].half_d") != std::string::npos);
    }
  }

  TEST_CASE("round trip through serialization") {
    const SceneGraph& g = fixture().graph;
    const SceneGraph again = load_poi(to_json(g));
    CHECK(again == g);
  }

  TEST_CASE("resolve_class") {
    const SceneGraph& g = fixture().graph;
    CHECK(resolve_class("ping pong table", g) == std::optional<std::string>("table tennis table"));
    CHECK(resolve_class("Statue", g) == std::optional<std::string>("statue"));
    CHECK(resolve_class("statue", g) == std::optional<std::string>("statue"));
    CHECK_FALSE(resolve_class("unicorn", g).has_value());
    for (const std::string q : {"bench", "benches", "bins", "flowerbed", "ping pong table", "steps",
                                "unicorn", "podium", "stone podium"}) {
      const auto once = resolve_class(q, g);
      if (once) CHECK(resolve_class(*once, g) == once);
    }
  }

  TEST_CASE("nearest_by_class") {
    const SceneGraph& g = fixture().graph;
    const auto statue = nearest_by_class(test::kRampPose, "statue", g);
    REQUIRE(statue);
    CHECK(statue->object->id == "statue_1");

    json doc = square_doc();
    doc["objects"] = {box_json("podium_2", "podium", {2, 0}, 0.4, 0.4),
                      box_json("podium_1", "podium", {-2, 0}, 0.4, 0.4)};
    const SceneGraph tie = load_poi(doc);
    const auto hit = nearest_by_class({{0, 0}, 0}, "podium", tie);
    REQUIRE(hit);
    CHECK(hit->object->id == "podium_1");

    const auto inside = nearest_by_class({{0.1, 0.1}, 0}, "statue", g);
    CHECK(inside->distance_m == 0.0);
  }

  TEST_CASE("nearest_by_class is the brute-force minimum") {
    const SceneGraph& g = fixture().graph;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-20, 20);
    const std::set<std::string> classes = {"bench", "trash bin", "podium", "flower bed", "statue"};
    for (int i = 0; i < 300; ++i) {
      const Pose p{{u(rng), u(rng)}, 0};
      for (const auto& cls : classes) {
        const auto hit = nearest_by_class(p, cls, g);
        REQUIRE(hit);
        for (const auto& o : g.objects) {
          if (o.class_label != cls) continue;
          REQUIRE(hit->distance_m <= o.box.distance_to(p.position) + 1e-12);
        }
      }
    }
  }

  TEST_CASE("objects_within") {
    const SceneGraph& g = fixture().graph;
    CHECK(objects_within({{-6, -3}, 0}, 0.01, g).empty());
    // Statue due north of the pose, heading north.
    const auto near = objects_within({{0, -3.6}, 0}, 3.0, g);
    const auto it = std::find_if(near.begin(), near.end(),
                                 [](const NearbyObject& n) { return n.object->id == "statue_1"; });
    REQUIRE(it != near.end());
    CHECK(it->description.rel_bearing == doctest::Approx(0.0));
    CHECK(it->description.side == "forward");
    CHECK(it->description.distance_m == doctest::Approx(3.0));
  }

  TEST_CASE("objects_within matches a brute-force sweep and nests by radius") {
    const SceneGraph& g = fixture().graph;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-20, 20), r(0.1, 12);
    for (int i = 0; i < 300; ++i) {
      const Pose p{{u(rng), u(rng)}, u(rng) + 20};
      double r1 = r(rng), r2 = r(rng);
      if (r1 > r2) std::swap(r1, r2);
      std::set<std::string> expect, got1, got2;
      for (const auto& o : g.objects) {
        if (o.box.distance_to(p.position) <= r1) expect.insert(o.id);
      }
      const auto a = objects_within(p, r1, g);
      for (const auto& n : a) got1.insert(n.object->id);
      for (const auto& n : objects_within(p, r2, g)) got2.insert(n.object->id);
      REQUIRE(got1 == expect);
      REQUIRE(std::includes(got2.begin(), got2.end(), got1.begin(), got1.end()));
      for (std::size_t k = 1; k < a.size(); ++k) {
        REQUIRE(a[k - 1].description.distance_m <= a[k].description.distance_m);
      }
    }
  }

  TEST_CASE("containment") {
    const SceneGraph& g = fixture().graph;
    const SceneObject& statue = *g.find("statue_1");
    const SceneObject& bed = *g.find("flower_bed_central");
    CHECK(contains(bed, statue));
    CHECK_FALSE(contains(statue, bed));
    CHECK(contains(bed, bed));
    CHECK(outermost_container(statue, g).id == "flower_bed_central");
  }

  TEST_CASE("containment is transitive on nested boxes") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-5, 5), yaw(0, 360), s(0.2, 3);
    int checked = 0;
    for (int i = 0; i < 4000; ++i) {
      const SceneObject a = make_obj("a", {u(rng), u(rng)}, s(rng) * 2, s(rng) * 2, yaw(rng));
      const SceneObject b = make_obj("b", {u(rng) / 3, u(rng) / 3}, s(rng), s(rng), yaw(rng));
      const SceneObject c = make_obj("c", {u(rng) / 5, u(rng) / 5}, s(rng) / 2, s(rng) / 2, yaw(rng));
      if (contains(a, b) && contains(b, c)) {
        ++checked;
        REQUIRE(contains(a, c));
      }
    }
    CHECK(checked > 20);
  }

  TEST_CASE("footprint edges") {
    const SceneObject unit = make_obj("u", {0, 0}, 0.5, 0.5, 0);
    std::set<std::pair<double, double>> corners;
    for (const auto& e : footprint_edges(unit)) corners.insert({e.a.x, e.a.y});
    CHECK(corners == std::set<std::pair<double, double>>{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}});

    const SceneObject turned = make_obj("t", {0, 0}, 0.5, 0.5, 90);
    for (const auto& e : footprint_edges(turned)) {
      CHECK(std::fabs(std::fabs(e.a.x) - 0.5) < 1e-12);
      CHECK(std::fabs(std::fabs(e.a.y) - 0.5) < 1e-12);
    }

    // yaw 45, half extents (1, 2): independent rotation of the local corners.
    const SceneObject o = make_obj("r", {3, -1}, 1.0, 2.0, 45);
    const auto edges = footprint_edges(o);
    const double th = 45 * kPi / 180;
    // local (w, d) -> world: w along right = (cos, -sin), d along forward = (sin, cos)
    std::vector<Point2> expect;
    for (auto [w, d] : std::vector<std::pair<double, double>>{{-1, -2}, {1, -2}, {1, 2}, {-1, 2}}) {
      expect.push_back({3 + w * std::cos(th) + d * std::sin(th), -1 - w * std::sin(th) + d * std::cos(th)});
    }
    for (const auto& e : edges) {
      const bool found = std::any_of(expect.begin(), expect.end(),
                                     [&](Point2 p) { return distance(p, e.a) < 1e-12; });
      CHECK(found);
    }
    double area = 0;
    for (const auto& e : edges) {
      area += cross(e.a, e.b);
      CHECK(distance(e.b, edges[(&e - edges.data() + 1) % 4].a) < 1e-12);
    }
    CHECK(area / 2 == doctest::Approx(8.0));
  }
}
