#include "lastmeter/prefs.hpp"

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {
constexpr std::array<std::string_view, 7> kCategoryNames = {
    "safety", "accessibility", "amenity", "layout", "attraction", "experience", "request"};
}  // namespace

std::string_view to_string(Category c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<Category> category_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  return std::nullopt;
}

std::string_view to_string(AccessMode m) {
  switch (m) {
    case AccessMode::Auto: return "auto";
    case AccessMode::Prompt: return "prompt";
    case AccessMode::Silent: return "silent";
  }
  return "prompt";
}

std::optional<AccessMode> access_mode_from_string(std::string_view s) {
  if (s == "auto") return AccessMode::Auto;
  if (s == "prompt") return AccessMode::Prompt;
  if (s == "silent") return AccessMode::Silent;
  return std::nullopt;
}

json to_json(const UserPrefs& p) {
  json modes = json::object();
  for (Category c : kAllCategories) modes[std::string(to_string(c))] = to_string(p.category_prefs.mode(c));
  return {{"direction_format", to_string(p.direction_format)},
          {"unit", to_string(p.unit.kind)},
          {"step_length_m", p.unit.step_length_m},
          {"verbosity_words", p.verbosity_words},
          {"category_modes", modes},
          {"voice", {{"timbre", p.voice.timbre}, {"rate", p.voice.rate}}},
          {"visual", {{"path_color", p.visual.path_color}, {"marker_color", p.visual.marker_color}}},
          {"visual_condition_note", p.visual_condition_note},
          {"explicit_wrong_way", p.explicit_wrong_way},
          {"compass_threshold_deg", p.compass_threshold_deg}};
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, "prefs." + key + ": " + what);
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    bad(key, "wrong type");
  }
}

}  // namespace

void apply_prefs_delta(UserPrefs& prefs, const json& delta) {
  if (!delta.is_object()) bad("", "delta must be an object");
  UserPrefs next = prefs;
  for (const auto& [key, v] : delta.items()) {
    if (key == "direction_format") {
      try {
        next.direction_format = direction_format_from_string(get_as<std::string>(v, key));
      } catch (const Error&) {
        bad(key, "unknown direction format");
      }
    } else if (key == "unit") {
      try {
        next.unit.kind = distance_kind_from_string(get_as<std::string>(v, key));
      } catch (const Error&) {
        bad(key, "unknown unit");
      }
    } else if (key == "step_length_m") {
      const double s = get_as<double>(v, key);
      if (!(s > 0.0)) bad(key, "must be positive");
      next.unit.step_length_m = s;
    } else if (key == "verbosity_words") {
      const int w = get_as<int>(v, key);
      if (w < kMinVerbosityWords) bad(key, "must be at least 10");
      next.verbosity_words = w;
    } else if (key == "category_modes") {
      if (!v.is_object()) bad(key, "expected an object");
      for (const auto& [cat, mode] : v.items()) {
        const auto c = category_from_string(cat);
        if (!c) bad(key + "." + cat, "unknown category");
        const auto m = access_mode_from_string(get_as<std::string>(mode, key + "." + cat));
        if (!m) bad(key + "." + cat, "unknown access mode");
        next.category_prefs.set(*c, *m);
      }
    } else if (key == "voice") {
      if (!v.is_object()) bad(key, "expected an object");
      if (v.contains("timbre")) next.voice.timbre = get_as<std::string>(v["timbre"], key + ".timbre");
      if (v.contains("rate")) {
        const double r = get_as<double>(v["rate"], key + ".rate");
        if (!(r > 0.0)) bad(key + ".rate", "must be positive");
        next.voice.rate = r;
      }
    } else if (key == "visual") {
      if (!v.is_object()) bad(key, "expected an object");
      if (v.contains("path_color")) {
        next.visual.path_color = get_as<std::string>(v["path_color"], key + ".path_color");
      }
      if (v.contains("marker_color")) {
        next.visual.marker_color = get_as<std::string>(v["marker_color"], key + ".marker_color");
      }
    } else if (key == "visual_condition_note") {
      next.visual_condition_note = get_as<std::string>(v, key);
    } else if (key == "explicit_wrong_way") {
      next.explicit_wrong_way = get_as<bool>(v, key);
    } else if (key == "compass_threshold_deg") {
      const double t = get_as<double>(v, key);
      if (!(t > 0.0 && t < 180.0)) bad(key, "must lie in (0, 180)");
      next.compass_threshold_deg = t;
    } else {
      bad(key, "unknown setting");
    }
  }
  prefs = std::move(next);
}

}  // namespace lastmeter
