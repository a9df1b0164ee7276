#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lastmeter/geometry.hpp"

namespace lastmeter {

// Annotation taxonomy, in classifier-independent display order.
enum class Category { Safety, Accessibility, Amenity, Layout, Attraction, Experience, Request };

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::Safety,     Category::Accessibility, Category::Amenity, Category::Layout,
    Category::Attraction, Category::Experience,    Category::Request};

std::string_view to_string(Category c);
std::optional<Category> category_from_string(std::string_view s);

enum class AccessMode { Auto, Prompt, Silent };

std::string_view to_string(AccessMode m);
std::optional<AccessMode> access_mode_from_string(std::string_view s);

struct CategoryPrefs {
  std::array<AccessMode, 7> modes = {AccessMode::Auto,   AccessMode::Auto,   AccessMode::Prompt,
                                     AccessMode::Prompt, AccessMode::Prompt, AccessMode::Prompt,
                                     AccessMode::Prompt};

  AccessMode mode(Category c) const { return modes[static_cast<std::size_t>(c)]; }
  void set(Category c, AccessMode m) { modes[static_cast<std::size_t>(c)] = m; }

  friend bool operator==(const CategoryPrefs&, const CategoryPrefs&) = default;
};

inline constexpr int kDefaultVerbosityWords = 45;
inline constexpr int kMinVerbosityWords = 10;
inline constexpr double kDefaultCompassThresholdDeg = 20.0;

struct VoicePrefs {
  std::string timbre = "default";
  double rate = 1.0;
  friend bool operator==(const VoicePrefs&, const VoicePrefs&) = default;
};

struct VisualPrefs {
  std::string path_color = "green";
  std::string marker_color = "pink";
  friend bool operator==(const VisualPrefs&, const VisualPrefs&) = default;
};

struct UserPrefs {
  DirectionFormat direction_format = DirectionFormat::ClockFace;
  DistanceUnit unit;
  int verbosity_words = kDefaultVerbosityWords;
  CategoryPrefs category_prefs;
  VoicePrefs voice;
  VisualPrefs visual;
  std::string visual_condition_note;
  bool explicit_wrong_way = true;
  double compass_threshold_deg = kDefaultCompassThresholdDeg;

  friend bool operator==(const UserPrefs&, const UserPrefs&) = default;
};

nlohmann::json to_json(const UserPrefs& prefs);

// Applies a partial prefs object (same keys as to_json). Throws
// Error(InvalidArgument) naming the offending key; prefs are untouched on
// failure.
void apply_prefs_delta(UserPrefs& prefs, const nlohmann::json& delta);

}  // namespace lastmeter
