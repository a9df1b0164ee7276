#include "lastmeter/annotations.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Numeric ids sort numerically, anything else after them lexically.
bool id_less(const std::string& a, const std::string& b) {
  const bool na = !a.empty() && std::all_of(a.begin(), a.end(), ::isdigit);
  const bool nb = !b.empty() && std::all_of(b.begin(), b.end(), ::isdigit);
  if (na && nb) return a.size() != b.size() ? a.size() < b.size() : a < b;
  if (na != nb) return na;
  return a < b;
}

json require(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(ErrorCode::SchemaError, where + "." + key + ": missing field");
  }
  return doc.at(key);
}

}  // namespace

double trigger_radius(Category c) {
  return (c == Category::Safety || c == Category::Accessibility) ? kCriticalTriggerRadiusM
                                                                 : kDefaultTriggerRadiusM;
}

json to_json(const Annotation& a) {
  json anchor;
  if (a.anchor.kind == AnnotationAnchor::Kind::Point) {
    anchor["point"] = {a.anchor.point.x, a.anchor.point.y};
  } else {
    anchor["object"] = a.anchor.object_id;
  }
  json out = {{"id", a.id},
              {"author", a.author_id},
              {"category", to_string(a.category)},
              {"text", a.text},
              {"anchor", anchor},
              {"created_at", a.created_at},
              {"updated_at", a.updated_at}};
  if (a.category_pinned) out["pinned"] = true;
  return out;
}

Annotation annotation_from_json(const json& doc) {
  const std::string where = "$";
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "$: expected object");
  Annotation a;
  try {
    a.id = require(doc, "id", where).get<std::string>();
    a.author_id = require(doc, "author", where).get<std::string>();
    const auto cat = category_from_string(require(doc, "category", where).get<std::string>());
    if (!cat) throw Error(ErrorCode::SchemaError, "$.category: unknown category");
    a.category = *cat;
    a.text = require(doc, "text", where).get<std::string>();
    const json anchor = require(doc, "anchor", where);
    if (anchor.contains("point")) {
      const json& p = anchor.at("point");
      if (!p.is_array() || p.size() != 2) {
        throw Error(ErrorCode::SchemaError, "$.anchor.point: expected [x, y]");
      }
      a.anchor = AnnotationAnchor::at({p[0].get<double>(), p[1].get<double>()});
    } else if (anchor.contains("object")) {
      a.anchor = AnnotationAnchor::on(anchor.at("object").get<std::string>());
    } else {
      throw Error(ErrorCode::SchemaError, "$.anchor: expected point or object");
    }
    a.created_at = require(doc, "created_at", where).get<double>();
    a.updated_at = require(doc, "updated_at", where).get<double>();
    a.category_pinned = doc.value("pinned", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("$: ") + e.what());
  }
  return a;
}

void AnnotationStore::validate(const std::string& text, const AnnotationAnchor& anchor) const {
  if (blank(text)) throw Error(ErrorCode::EmptyText, "annotation text is empty");
  if (text.size() > kMaxAnnotationChars) {
    throw Error(ErrorCode::InvalidArgument, "annotation text exceeds 2000 characters");
  }
  if (anchor.kind == AnnotationAnchor::Kind::Point) {
    if (!is_valid_local(anchor.point)) throw Error(ErrorCode::BadAnchor, "anchor point invalid");
  } else if (!graph_ || !graph_->find(anchor.object_id)) {
    throw Error(ErrorCode::BadAnchor, "unknown anchor object '" + anchor.object_id + "'");
  }
}

std::string AnnotationStore::next_id() const {
  unsigned long long best = 0;
  for (const auto& [id, _] : items_) {
    if (!id.empty() && id.size() < 19 && std::all_of(id.begin(), id.end(), ::isdigit)) {
      best = std::max(best, std::stoull(id));
    }
  }
  return std::to_string(best + 1);
}

Annotation AnnotationStore::create(const std::string& author_id, const std::string& text,
                                   const AnnotationAnchor& anchor,
                                   std::optional<Category> category, double now) {
  validate(text, anchor);
  Annotation a;
  a.author_id = author_id;
  a.text = text;
  a.anchor = anchor;
  a.category = category ? *category : classify(text);
  a.category_pinned = category.has_value();
  a.created_at = now;
  a.updated_at = now;
  std::unique_lock lock(mutex_);
  a.id = next_id();
  items_.emplace(a.id, a);
  ++revision_;
  return a;
}

Annotation AnnotationStore::edit(const std::string& id, const std::string& author_id,
                                 const std::string& new_text, double now) {
  std::unique_lock lock(mutex_);
  auto it = items_.find(id);
  if (it == items_.end()) throw Error(ErrorCode::NotFound, "annotation '" + id + "' not found");
  if (it->second.author_id != author_id) {
    throw Error(ErrorCode::NotAuthor, "annotation '" + id + "' belongs to another author");
  }
  validate(new_text, it->second.anchor);
  Annotation& a = it->second;
  a.text = new_text;
  if (!a.category_pinned) a.category = classify(new_text);
  // Keep updated_at strictly advancing even when the clock stands still.
  a.updated_at = std::max(now, std::nextafter(a.updated_at, INFINITY));
  ++revision_;
  return a;
}

void AnnotationStore::remove(const std::string& id, const std::string& author_id) {
  std::unique_lock lock(mutex_);
  auto it = items_.find(id);
  if (it == items_.end()) throw Error(ErrorCode::NotFound, "annotation '" + id + "' not found");
  if (it->second.author_id != author_id) {
    throw Error(ErrorCode::NotAuthor, "annotation '" + id + "' belongs to another author");
  }
  items_.erase(it);
  ++revision_;
}

void AnnotationStore::insert(const Annotation& a) {
  if (a.anchor.kind == AnnotationAnchor::Kind::Object && graph_ && !graph_->find(a.anchor.object_id)) {
    throw Error(ErrorCode::BadAnchor, "annotation '" + a.id + "': unknown anchor object '" +
                                          a.anchor.object_id + "'");
  }
  std::unique_lock lock(mutex_);
  if (!items_.emplace(a.id, a).second) {
    throw Error(ErrorCode::DuplicateId, "duplicate annotation id '" + a.id + "'");
  }
  ++revision_;
}

std::optional<Annotation> AnnotationStore::get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = items_.find(id);
  if (it == items_.end()) return std::nullopt;
  return it->second;
}

std::vector<Annotation> AnnotationStore::all() const {
  std::vector<Annotation> out;
  {
    std::shared_lock lock(mutex_);
    out.reserve(items_.size());
    for (const auto& [_, a] : items_) out.push_back(a);
  }
  std::sort(out.begin(), out.end(), [](const Annotation& a, const Annotation& b) {
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return id_less(a.id, b.id);
  });
  return out;
}

std::size_t AnnotationStore::size() const {
  std::shared_lock lock(mutex_);
  return items_.size();
}

std::uint64_t AnnotationStore::revision() const {
  std::shared_lock lock(mutex_);
  return revision_;
}

double AnnotationStore::anchor_distance(const Annotation& a, Point2 p) const {
  if (a.anchor.kind == AnnotationAnchor::Kind::Point) return distance(a.anchor.point, p);
  const SceneObject* o = graph_ ? graph_->find(a.anchor.object_id) : nullptr;
  if (!o) return INFINITY;
  return o->box.distance_to(p);
}

Point2 AnnotationStore::anchor_point(const Annotation& a, Point2 from) const {
  if (a.anchor.kind == AnnotationAnchor::Kind::Point) return a.anchor.point;
  const SceneObject* o = graph_ ? graph_->find(a.anchor.object_id) : nullptr;
  if (!o) throw Error(ErrorCode::BadAnchor, "unknown anchor object '" + a.anchor.object_id + "'");
  return o->box.contains(from, 0.0) ? o->box.center : o->box.closest_point(from);
}

std::vector<Annotation> AnnotationStore::query(const AnnotationFilter& filter,
                                               const std::optional<Pose>& pose) const {
  if (filter.radius_m && !pose) {
    throw Error(ErrorCode::InvalidArgument, "radius filter needs a pose");
  }
  if (filter.radius_m && *filter.radius_m <= 0.0) return {};
  const std::string needle = filter.text_contains ? lower(*filter.text_contains) : "";
  std::vector<std::pair<double, Annotation>> hits;
  for (Annotation& a : all()) {
    if (filter.category && a.category != *filter.category) continue;
    if (filter.author_id && a.author_id != *filter.author_id) continue;
    if (!needle.empty() && lower(a.text).find(needle) == std::string::npos) continue;
    const double d = pose ? anchor_distance(a, pose->position) : 0.0;
    if (filter.radius_m && d > *filter.radius_m) continue;
    hits.emplace_back(d, std::move(a));
  }
  if (pose) {
    std::stable_sort(hits.begin(), hits.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });
  }
  std::vector<Annotation> out;
  out.reserve(hits.size());
  for (auto& [_, a] : hits) out.push_back(std::move(a));
  return out;
}

void AnnotationStore::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open annotations file '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      insert(annotation_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void AnnotationStore::save_jsonl(const std::string& path) const {
  std::ostringstream buf;
  for (const Annotation& a : all()) buf << to_json(a).dump() << '\n';
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << buf.str();
}

std::vector<TriggerEvent> TriggerEngine::scan(const AnnotationStore& store, const Pose& pose,
                                              const CategoryPrefs& prefs, double now) {
  std::vector<std::pair<double, TriggerEvent>> fired;
  for (const Annotation& a : store.all()) {
    const double d = store.anchor_distance(a, pose.position);
    const double r = trigger_radius(a.category);
    if (auto it = disarmed_.find(a.id); it != disarmed_.end()) {
      if (d > r + kRearmHysteresisM && now - it->second.at >= kRearmCooldownS - 1e-9) {
        disarmed_.erase(it);
      } else {
        continue;
      }
    }
    const AccessMode mode = prefs.mode(a.category);
    if (mode == AccessMode::Silent || d > r) continue;
    TriggerEvent e;
    e.annotation_id = a.id;
    e.category = a.category;
    e.mode_at_fire = mode;
    e.trigger_time = now;
    e.distance_m = d;
    e.vibration_s = a.category == Category::Safety ? kSafetyVibrationS : 0.0;
    e.text = a.text;
    disarmed_[a.id] = {now};
    fired.emplace_back(d, std::move(e));
  }
  std::stable_sort(fired.begin(), fired.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<TriggerEvent> out;
  for (auto& [_, e] : fired) out.push_back(std::move(e));
  return out;
}

bool TriggerEngine::armed(const std::string& id) const { return !disarmed_.contains(id); }

std::string number_word(std::size_t n) {
  static constexpr std::array<std::string_view, 21> kWords = {
      "zero",    "one",     "two",       "three",    "four",     "five",    "six",
      "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
      "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen", "twenty"};
  return n < kWords.size() ? std::string(kWords[n]) : std::to_string(n);
}

std::string aggregate_prompt(const std::vector<TriggerEvent>& prompt_triggers) {
  std::array<std::size_t, kAllCategories.size()> counts{};
  for (const TriggerEvent& t : prompt_triggers) ++counts[static_cast<std::size_t>(t.category)];
  std::string out;
  for (Category c : kAllCategories) {
    const std::size_t n = counts[static_cast<std::size_t>(c)];
    if (n == 0) continue;
    if (!out.empty()) out += " and ";
    out += number_word(n) + " " + std::string(to_string(c)) + (n == 1 ? " note" : " notes");
  }
  return out.empty() ? out : out + " nearby";
}

double estimate_speech_s(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::size_t words = 0;
  for (std::string w; in >> w;) ++words;
  return static_cast<double>(std::max<std::size_t>(words, 1)) / kSpeechWordsPerSecond;
}

std::vector<PlaybackDecision> schedule(std::vector<PlaybackItem> queue, double channel_free) {
  std::stable_sort(queue.begin(), queue.end(), [](const PlaybackItem& a, const PlaybackItem& b) {
    const bool a_auto = a.mode == AccessMode::Auto;
    const bool b_auto = b.mode == AccessMode::Auto;
    if (a_auto != b_auto) return a_auto;
    return a.trigger_time < b.trigger_time;
  });
  std::vector<PlaybackDecision> out;
  out.reserve(queue.size());
  double free = channel_free;
  for (PlaybackItem& item : queue) {
    PlaybackDecision d;
    d.start_time = std::max(free, item.trigger_time);
    if (d.start_time - item.trigger_time > kSkipBoundS) {
      d.outcome = PlaybackDecision::Outcome::Skipped;
    } else {
      free = d.start_time + item.est_duration_s;
    }
    d.item = std::move(item);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<PlaybackItem> playback_items(const std::vector<TriggerEvent>& triggers) {
  std::vector<PlaybackItem> items;
  std::vector<TriggerEvent> prompts;
  for (const TriggerEvent& t : triggers) {
    if (t.mode_at_fire == AccessMode::Prompt) {
      prompts.push_back(t);
      continue;
    }
    PlaybackItem item;
    item.annotation_ids = {t.annotation_id};
    item.text = t.text;
    item.mode = AccessMode::Auto;
    item.trigger_time = t.trigger_time;
    item.est_duration_s = estimate_speech_s(t.text);
    item.vibration_s = t.vibration_s;
    items.push_back(std::move(item));
  }
  if (!prompts.empty()) {
    PlaybackItem agg;
    agg.kind = PlaybackItem::Kind::PromptAggregate;
    for (const TriggerEvent& t : prompts) agg.annotation_ids.push_back(t.annotation_id);
    agg.text = aggregate_prompt(prompts);
    agg.mode = AccessMode::Prompt;
    agg.trigger_time = prompts.front().trigger_time;
    agg.est_duration_s = estimate_speech_s(agg.text);
    items.push_back(std::move(agg));
  }
  return items;
}

std::vector<PlaybackDecision> PlaybackChannel::enqueue(std::vector<PlaybackItem> items,
                                                       double now) {
  auto decisions = schedule(std::move(items), std::max(free_at_, now));
  for (const PlaybackDecision& d : decisions) {
    if (d.outcome == PlaybackDecision::Outcome::Played) {
      free_at_ = std::max(free_at_, d.start_time + d.item.est_duration_s);
    }
  }
  return decisions;
}

json to_json(const TriggerEvent& e) {
  return {{"type", "annotation_trigger"}, {"id", e.annotation_id},
          {"category", to_string(e.category)}, {"mode", to_string(e.mode_at_fire)},
          {"t", e.trigger_time},            {"distance_m", e.distance_m},
          {"vibration_s", e.vibration_s},   {"text", e.text}};
}

json to_json(const PlaybackDecision& d) {
  return {{"type", "playback"},
          {"kind", d.item.kind == PlaybackItem::Kind::Annotation ? "annotation" : "prompt"},
          {"ids", d.item.annotation_ids},
          {"text", d.item.text},
          {"mode", to_string(d.item.mode)},
          {"trigger_t", d.item.trigger_time},
          {"start_t", d.start_time},
          {"duration_s", d.item.est_duration_s},
          {"outcome", d.outcome == PlaybackDecision::Outcome::Played ? "played" : "skipped"}};
}

}  // namespace lastmeter
