#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lastmeter/geometry.hpp"
#include "lastmeter/prefs.hpp"
#include "lastmeter/scene_graph.hpp"

namespace lastmeter {

inline constexpr std::size_t kMaxAnnotationChars = 2000;
inline constexpr double kCriticalTriggerRadiusM = 1.5;
inline constexpr double kDefaultTriggerRadiusM = 1.0;
inline constexpr double kRearmHysteresisM = 0.5;
inline constexpr double kRearmCooldownS = 60.0;
inline constexpr double kSafetyVibrationS = 0.5;
inline constexpr double kSkipBoundS = 15.0;
inline constexpr double kSpeechWordsPerSecond = 2.5;

struct AnnotationAnchor {
  enum class Kind { Point, Object };
  Kind kind = Kind::Point;
  Point2 point;
  std::string object_id;

  static AnnotationAnchor at(Point2 p) { return {Kind::Point, p, {}}; }
  static AnnotationAnchor on(std::string id) { return {Kind::Object, {}, std::move(id)}; }

  friend bool operator==(const AnnotationAnchor&, const AnnotationAnchor&) = default;
};

struct Annotation {
  std::string id;
  std::string author_id;
  Category category = Category::Experience;
  std::string text;
  AnnotationAnchor anchor;
  double created_at = 0.0;
  double updated_at = 0.0;
  // Set when the author chose the category; edits then keep it.
  bool category_pinned = false;
  std::string visibility = "public";

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

nlohmann::json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& doc);

double trigger_radius(Category c);

struct AnnotationFilter {
  std::optional<Category> category;
  std::optional<std::string> author_id;
  std::optional<double> radius_m;  // needs a pose
  std::optional<std::string> text_contains;
};

// Thread-safe store: concurrent readers, exclusive writers. Object anchors
// are resolved against the graph given at construction.
class AnnotationStore {
 public:
  explicit AnnotationStore(const SceneGraph* graph = nullptr) : graph_(graph) {}

  Annotation create(const std::string& author_id, const std::string& text,
                    const AnnotationAnchor& anchor, std::optional<Category> category, double now);
  Annotation edit(const std::string& id, const std::string& author_id,
                  const std::string& new_text, double now);
  void remove(const std::string& id, const std::string& author_id);
  // Inserts a fully formed record (file loading). Throws DuplicateId.
  void insert(const Annotation& a);

  std::optional<Annotation> get(const std::string& id) const;
  // Sorted by (created_at, numeric id).
  std::vector<Annotation> all() const;
  std::vector<Annotation> query(const AnnotationFilter& filter,
                                const std::optional<Pose>& pose = std::nullopt) const;
  std::size_t size() const;
  std::uint64_t revision() const;

  // Boundary distance for object anchors, point distance otherwise.
  double anchor_distance(const Annotation& a, Point2 p) const;
  Point2 anchor_point(const Annotation& a, Point2 from) const;
  const SceneGraph* graph() const { return graph_; }

  void load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path) const;

 private:
  void validate(const std::string& text, const AnnotationAnchor& anchor) const;
  std::string next_id() const;

  const SceneGraph* graph_ = nullptr;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Annotation> items_;
  std::uint64_t revision_ = 0;
};

// Automatic categorization by rule cascade.
Category classify(std::string_view text);

struct TriggerEvent {
  std::string annotation_id;
  Category category = Category::Experience;
  AccessMode mode_at_fire = AccessMode::Auto;
  double trigger_time = 0.0;
  double distance_m = 0.0;
  double vibration_s = 0.0;  // 0.5 for Safety, else 0
  std::string text;

  friend bool operator==(const TriggerEvent&, const TriggerEvent&) = default;
};

// Per-session proximity state. A note fires when inside its radius and armed;
// it re-arms once the walker is beyond radius + 0.5 m and 60 s have passed
// since it fired.
class TriggerEngine {
 public:
  std::vector<TriggerEvent> scan(const AnnotationStore& store, const Pose& pose,
                                 const CategoryPrefs& prefs, double now);
  bool armed(const std::string& id) const;

 private:
  struct Fired {
    double at = 0.0;
  };
  std::map<std::string, Fired> disarmed_;
};

std::string number_word(std::size_t n);

// "two attraction notes nearby", categories in taxonomy order joined by "and".
std::string aggregate_prompt(const std::vector<TriggerEvent>& prompt_triggers);

double estimate_speech_s(std::string_view text);

struct PlaybackItem {
  enum class Kind { Annotation, PromptAggregate };
  Kind kind = Kind::Annotation;
  std::vector<std::string> annotation_ids;
  std::string text;
  AccessMode mode = AccessMode::Auto;
  double trigger_time = 0.0;
  double est_duration_s = 0.0;
  double vibration_s = 0.0;
};

struct PlaybackDecision {
  enum class Outcome { Played, Skipped };
  PlaybackItem item;
  double start_time = 0.0;
  Outcome outcome = Outcome::Played;
};

// Single channel. Auto items go before prompt aggregates, FIFO within each
// class by trigger time. An item starts at max(channel_free, trigger time,
// previous end) and is skipped if that is more than 15 s after its trigger.
std::vector<PlaybackDecision> schedule(std::vector<PlaybackItem> queue, double channel_free);

// Turns one scan's triggers into playback items: one per Auto trigger plus a
// single aggregate for the Prompt ones.
std::vector<PlaybackItem> playback_items(const std::vector<TriggerEvent>& triggers);

class PlaybackChannel {
 public:
  std::vector<PlaybackDecision> enqueue(std::vector<PlaybackItem> items, double now);
  double free_at() const { return free_at_; }

 private:
  double free_at_ = 0.0;
};

nlohmann::json to_json(const TriggerEvent& e);
nlohmann::json to_json(const PlaybackDecision& d);

}  // namespace lastmeter
