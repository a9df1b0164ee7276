#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "lastmeter/sim.hpp"

namespace lastmeter::test {

inline std::string data_path(const std::string& rel) { return std::string(LASTMETER_DATA_DIR) + "/" + rel; }
inline std::string test_path(const std::string& rel) { return std::string(LASTMETER_TEST_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh copy of the fixture world (its store is mutable).
inline std::shared_ptr<World> fixture_world() {
  return load_world(data_path("golden_square/poi.json"),
                    data_path("golden_square/annotations.jsonl"));
}

// Shared read-only fixture.
inline const World& fixture() {
  static const std::shared_ptr<World> w = fixture_world();
  return *w;
}

inline constexpr Pose kRampPose{{0.0, -15.5}, 0.0};

}  // namespace lastmeter::test
