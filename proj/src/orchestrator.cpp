#include "lastmeter/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <sstream>

#include "lastmeter/error.hpp"

namespace lastmeter {

using nlohmann::json;

namespace {

std::string fold_quotes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s.compare(i, 3, "\xE2\x80\x99") == 0 || s.compare(i, 3, "\xE2\x80\x98") == 0) {
      out += '\'';
      i += 3;
    } else if (s.compare(i, 3, "\xE2\x80\x9C") == 0 || s.compare(i, 3, "\xE2\x80\x9D") == 0) {
      out += '"';
      i += 3;
    } else {
      out += s[i++];
    }
  }
  return out;
}

// Trims and collapses runs of whitespace to one space.
std::string squeeze(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
    } else {
      if (space) out += ' ';
      space = false;
      out += c;
    }
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string strip(std::string s, std::string_view chars = " \t\"'.,!?;:") {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(chars);
  return s.substr(b, e - b + 1);
}

// Strips only wrapping quotes and trailing sentence punctuation that sits
// outside the quotes, keeping the note's own punctuation.
std::string unquote(std::string s) {
  s = strip(s, " \t,:");
  if (s.empty()) return s;
  const char q = s.front();
  if (q == '\'' || q == '"') {
    const auto end = s.find_last_of(q);
    if (end != 0) return strip(s.substr(1, end - 1), " \t");
  }
  while (!s.empty() && (s.back() == '.' || s.back() == ' ')) s.pop_back();
  return s;
}

bool search(const std::string& s, const std::regex& re) { return std::regex_search(s, re); }

std::regex re(const char* pattern) { return std::regex(pattern, std::regex::ECMAScript); }

std::string poi_name(const SceneGraph& g) {
  std::string name = g.poi_id;
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

bool ends_with(std::string_view s, std::string_view tail) {
  return s.size() >= tail.size() && s.substr(s.size() - tail.size()) == tail;
}

std::string with_article(const std::string& noun) {
  if (ends_with(noun, "stairs")) return "a set of " + noun;
  if (!noun.empty() && std::string_view("aeiou").find(noun.front()) != std::string_view::npos) {
    return "an " + noun;
  }
  return "a " + noun;
}

std::string plural(const std::string& noun) {
  if (ends_with(noun, "stairs")) return "sets of " + noun;
  if (ends_with(noun, "s") || ends_with(noun, "x") || ends_with(noun, "ch") || ends_with(noun, "sh")) {
    return noun + "es";
  }
  return noun + "s";
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string distance_text(double d, const UserPrefs& prefs) {
  return format_distance(d, prefs.unit).text;
}

const std::vector<std::pair<std::string, Category>>& category_words() {
  static const std::vector<std::pair<std::string, Category>> kWords = {
      {"safety", Category::Safety},         {"accessibility", Category::Accessibility},
      {"amenity", Category::Amenity},       {"amenities", Category::Amenity},
      {"layout", Category::Layout},         {"attraction", Category::Attraction},
      {"attractions", Category::Attraction}, {"experience", Category::Experience},
      {"experiences", Category::Experience}, {"request", Category::Request},
      {"requests", Category::Request}};
  return kWords;
}

std::optional<Category> category_in(const std::string& low) {
  for (const auto& [word, cat] : category_words()) {
    if (search(low, std::regex("\\b" + word + "\\b"))) return cat;
  }
  return std::nullopt;
}

// Longest leading word run of `phrase` that names a class in the graph.
std::optional<std::string> class_prefix(const std::string& phrase, const SceneGraph* graph) {
  if (!graph) return std::nullopt;
  std::vector<std::string> words;
  std::istringstream in(phrase);
  for (std::string w; in >> w;) words.push_back(w);
  for (std::size_t n = words.size(); n > 0; --n) {
    std::string candidate;
    for (std::size_t i = 0; i < n; ++i) candidate += (i ? " " : "") + words[i];
    if (auto c = resolve_class(candidate, *graph)) return c;
  }
  return std::nullopt;
}

std::string drop_leading_article(std::string s) {
  for (const char* a : {"the ", "a ", "an ", "my "}) {
    if (s.rfind(a, 0) == 0) return s.substr(std::string_view(a).size());
  }
  return s;
}

std::optional<intent::Customize> parse_customize(const std::string& low, const UserPrefs& prefs) {
  static const std::regex kVerb =
      re(R"(\b(use|using|switch|change|set|give|prefer|want|make|turn|mute|unmute|speak|talk|be|play|announce|keep)\b)");
  if (!search(low, kVerb)) return std::nullopt;
  std::smatch m;

  static const std::regex kCatMode =
      re(R"(\b(safety|accessibility|amenity|amenities|layout|attraction|attractions|experience|experiences|request|requests)\b.*\b(silent|mute|muted|off|auto|automatic|automatically|prompt|prompted|ask|notify|notification)\b)");
  static const std::regex kMute =
      re(R"(\b(mute|silence)\b.*\b(safety|accessibility|amenity|amenities|layout|attraction|attractions|experience|experiences|request|requests)\b)");
  if (std::regex_search(low, m, kMute)) {
    const auto cat = category_in(m[2].str());
    json delta = {{"category_modes", {{std::string(to_string(*cat)), "silent"}}}};
    return intent::Customize{"category_modes", delta};
  }
  if (std::regex_search(low, m, kCatMode) && search(low, re(R"(\bnotes?\b|\bannotations?\b)"))) {
    const auto cat = category_in(m[1].str());
    const std::string w = m[2].str();
    std::string mode = "prompt";
    if (w == "silent" || w == "mute" || w == "muted" || w == "off") mode = "silent";
    if (w.rfind("auto", 0) == 0) mode = "auto";
    json delta = {{"category_modes", {{std::string(to_string(*cat)), mode}}}};
    return intent::Customize{"category_modes", delta};
  }

  if (search(low, re(R"(\bsteps?\b)"))) return intent::Customize{"unit", {{"unit", "steps"}}};
  if (search(low, re(R"(\b(feet|foot)\b)"))) return intent::Customize{"unit", {{"unit", "feet"}}};
  if (search(low, re(R"(\b(meters?|metres?)\b)"))) {
    return intent::Customize{"unit", {{"unit", "meters"}}};
  }
  if (search(low, re(R"(\bclock\b)"))) {
    return intent::Customize{"direction_format", {{"direction_format", "clock_face"}}};
  }
  if (search(low, re(R"(\bdegrees?\b)"))) {
    return intent::Customize{"direction_format", {{"direction_format", "egocentric_degrees"}}};
  }
  if (search(low, re(R"(\b(cardinal|compass directions)\b)"))) {
    return intent::Customize{"direction_format", {{"direction_format", "cardinal"}}};
  }
  if (search(low, re(R"(\b(egocentric|left and right|left or right)\b)"))) {
    return intent::Customize{"direction_format", {{"direction_format", "egocentric"}}};
  }
  if (std::regex_search(low, m, re(R"(\b(\d+)\s+words\b)"))) {
    const int n = std::max(kMinVerbosityWords, std::stoi(m[1].str()));
    return intent::Customize{"verbosity_words", {{"verbosity_words", n}}};
  }
  if (search(low, re(R"(\b(shorter|concise|briefer|brief|less detail|fewer words)\b)"))) {
    const int n = std::max(kMinVerbosityWords, prefs.verbosity_words - 15);
    return intent::Customize{"verbosity_words", {{"verbosity_words", n}}};
  }
  if (search(low, re(R"(\b(longer|more detail|more details|more detailed|verbose)\b)"))) {
    return intent::Customize{"verbosity_words", {{"verbosity_words", prefs.verbosity_words + 15}}};
  }
  if (std::regex_search(low, m, re(R"(\bpath colou?r\b.*\bto\s+([a-z]+))"))) {
    return intent::Customize{"visual", {{"visual", {{"path_color", m[1].str()}}}}};
  }
  if (std::regex_search(low, m, re(R"(\bmarker colou?r\b.*\bto\s+([a-z]+))"))) {
    return intent::Customize{"visual", {{"visual", {{"marker_color", m[1].str()}}}}};
  }
  return std::nullopt;
}

intent::Navigate parse_nav_target(std::string phrase, const SessionContext& ctx) {
  intent::Navigate nav;
  static const std::regex kPoint = re(R"((-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?))");
  std::smatch m;
  if (std::regex_search(phrase, m, kPoint)) {
    nav.target = intent::Navigate::Target::Point;
    nav.point = {std::stod(m[1].str()), std::stod(m[2].str())};
    return nav;
  }
  phrase = strip(squeeze(phrase));
  phrase = drop_leading_article(phrase);
  static const std::vector<std::pair<std::regex, int>> kRanks = {
      {re(R"(\b(second nearest|second closest)\s+)"), 1},
      {re(R"(\b(furthest|farthest)\s+)"), -1},
      {re(R"(\b(nearest|closest)\s+)"), 0}};
  for (const auto& [pattern, rank] : kRanks) {
    if (std::regex_search(phrase, m, pattern)) {
      nav.rank = rank;
      phrase = strip(std::regex_replace(phrase, pattern, ""));
      break;
    }
  }
  phrase = drop_leading_article(phrase);
  if (auto c = ctx.graph ? resolve_class(phrase, *ctx.graph) : std::nullopt) {
    nav.class_label = *c;
    return nav;
  }
  if (auto c = class_prefix(phrase, ctx.graph)) {
    nav.class_label = *c;
    return nav;
  }
  nav.target = intent::Navigate::Target::Annotation;
  std::string ref = std::regex_replace(phrase, re(R"('s\b)"), "");
  ref = std::regex_replace(ref, re(R"(\b(notes?|annotations?|meeting (point|spot|place))\b)"), "");
  nav.annotation_ref = strip(squeeze(ref));
  return nav;
}

}  // namespace

std::string intent_name(const Intent& i) {
  static constexpr std::array<std::string_view, 14> kNames = {
      "where_am_i",        "describe_surroundings", "object_query",      "navigate",
      "annotation_query",  "annotation_create",     "annotation_edit",   "annotation_delete",
      "customize",         "repeat",                "visual_query",      "web_query",
      "map_query",         "unknown"};
  return std::string(kNames[i.index()]);
}

void SessionContext::remember(std::string query, std::string reply) {
  memory.push_back({std::move(query), std::move(reply)});
  while (memory.size() > kChatMemoryTurns) memory.pop_front();
}

Intent resolve_intent(const std::string& text, const SessionContext& ctx) {
  const std::string src = squeeze(fold_quotes(text));
  const std::string low = lower(src);
  std::smatch m;

  if (search(low, re(R"(\b(repeat|say (that|it) again|what did you (just )?say)\b)"))) {
    return intent::Repeat{};
  }

  static const std::regex kCreate = re(
      R"(\b(place|add|create|leave|make|put|record|drop|write)\b(.*?)\b(annotation|note)\b(.*?)(\bsaying\b|\bthat says\b|\bwhich says\b|\bsays\b|\breading\b|:)(.+)$)");
  if (std::regex_search(low, m, kCreate)) {
    intent::AnnotationCreate c;
    c.text = unquote(src.substr(static_cast<std::size_t>(m.position(6))));
    c.anchor_hint = "here";
    std::smatch on;
    const std::string where = m[2].str() + " " + m[4].str();
    static const std::regex kOn = re(R"(\b(on|at|by|near) (the |that |this )?([a-z ]+?)\s*,?\s*$)");
    if (std::regex_search(where, on, kOn) && on[3].str() != "here") {
      if (auto cls = class_prefix(strip(on[3].str()), ctx.graph)) c.anchor_hint = *cls;
    }
    return c;
  }

  static const std::regex kEdit = re(
      R"(\b(edit|change|update|modify|rewrite)\b.*?\b(annotation|note)\b\s*(?:(?:about|on|saying|that says)\s+)?(?:the\s+)?(.*?)\s+(?:to say|to read|so it says|so that it says|to)\s+(.+)$)");
  if (std::regex_search(low, m, kEdit)) {
    return intent::AnnotationEdit{strip(m[3].str()),
                                  unquote(src.substr(static_cast<std::size_t>(m.position(4))))};
  }

  static const std::regex kDelete = re(
      R"(\b(delete|remove|erase)\b.*?\b(annotation|note)\b\s*(?:(?:about|on|saying|that says|for)\s+(?:the\s+)?(.+))?$)");
  if (std::regex_search(low, m, kDelete)) {
    return intent::AnnotationDelete{strip(m[3].str())};
  }

  static const std::regex kNav = re(
      R"(\b(?:guide|take|lead|bring|walk|direct|get)\s+me\s+(?:back\s+)?to\s+(.+)$|\bhow (?:do|can) i get to\s+(.+)$|\bnavigate (?:me )?to\s+(.+)$|^(?:please,? )?go to\s+(.+)$)");
  if (std::regex_search(low, m, kNav)) {
    for (int g = 1; g <= 4; ++g) {
      if (m[g].matched) return parse_nav_target(m[g].str(), ctx);
    }
  }

  if (auto c = parse_customize(low, ctx.prefs)) return *c;

  if (search(low, re(R"(\b(annotations?|notes?)\b)"))) {
    intent::AnnotationQuery q;
    q.filter.category = category_in(low);
    if (search(low, re(R"(\b(nearby|around|near me|around me|here|close)\b)"))) {
      q.filter.radius_m = kSurroundingsRadiusM;
    }
    if (std::regex_search(low, m, re(R"(\babout (?:the |a |an )?([a-z' ]+))"))) {
      q.filter.text_contains = strip(m[1].str());
    }
    if (search(low, re(R"(\bmy (annotations?|notes?)\b)"))) q.filter.author_id = ctx.user_id;
    return q;
  }

  if (search(low, re(R"(\bwhere am i\b)"))) return intent::WhereAmI{};
  if (search(low, re(
          R"(\b(what'?s|what is|what are|what's|who is) (around|near|nearby|close to|next to) me\b|\bdescribe\b|\bsurround|\blook around\b|\bwhat is here\b|\bwhat'?s here\b)"))) {
    return intent::DescribeSurroundings{};
  }

  if (std::regex_search(low, m, re(R"(\bis (?:the |a )?([a-z ]+?) (?:inside|in) (?:the |a )?([a-z ]+?)\s*\??$)"))) {
    auto inner = class_prefix(m[1].str(), ctx.graph);
    auto outer = class_prefix(m[2].str(), ctx.graph);
    if (inner && outer) return intent::ObjectQuery{*inner, "inside", *outer};
  }
  if (std::regex_search(low, m, re(R"(\bhow many ([a-z ]+?)(?: are there| are here| here| in .*)?\s*\??$)"))) {
    if (auto c = class_prefix(m[1].str(), ctx.graph)) return intent::ObjectQuery{*c, "count", ""};
  }
  if (std::regex_search(low, m, re(R"(\b(where is|where's|where are|how far is|how far away is|find) (?:the |a |an )?(?:nearest |closest )?([a-z ]+?)\s*\??$)"))) {
    if (auto c = class_prefix(m[2].str(), ctx.graph)) {
      return intent::ObjectQuery{*c, m[1].str().rfind("how far", 0) == 0 ? "distance" : "where", ""};
    }
  }

  if (search(low, re(
          R"(\b(see|looks? like|colou?rs?|camera|in front of me|free|available|occupied|empty|crowded|busy)\b)"))) {
    return intent::VisualQuery{src};
  }
  if (search(low, re(
          R"(\b(restaurants?|cafes?|caf\xC3\xA9s?|coffee|shops?|stores?|pharmacy|pharmacies|station|bus|tube|hotels?|attractions?|museums?|places?|open now)\b)"))) {
    return intent::MapQuery{src};
  }
  if (search(low, re(
          R"(\b(history|who|when was|search|look up|weather|what is|what's|tell me about|why)\b)"))) {
    return intent::WebQuery{src};
  }
  return intent::Unknown{text};
}

std::string place_phrase(double rel_bearing, const UserPrefs& prefs, double heading_deg) {
  switch (prefs.direction_format) {
    case DirectionFormat::ClockFace:
      return "at " + std::to_string(to_clock_hour(rel_bearing)) + " o'clock";
    case DirectionFormat::Egocentric8: {
      const std::string label(to_egocentric(rel_bearing, 8));
      if (label == "forward") return "ahead";
      if (label == "backward") return "behind you";
      return "to your " + label;
    }
    case DirectionFormat::EgocentricDegrees: {
      const double err = signed_bearing_error(rel_bearing);
      const long deg = static_cast<long>(round_half_away(std::abs(err) / 5.0)) * 5;
      if (deg == 0) return "straight ahead";
      return std::to_string(deg) + " degrees " + (err < 0 ? "left" : "right");
    }
    case DirectionFormat::Cardinal:
      return "to the " + std::string(cardinal_word(heading_deg + rel_bearing));
  }
  return {};
}

namespace {

std::string object_phrase(const NearbyObject& n, const UserPrefs& prefs, double heading) {
  const std::string label = with_article(n.object->class_label);
  if (n.description.distance_m <= 0.0) return label + " right where you are";
  return label + " " + place_phrase(n.description.rel_bearing, prefs, heading) + ", " +
         distance_text(n.description.distance_m, prefs);
}

}  // namespace

std::string where_am_i(const SessionContext& ctx) {
  if (!ctx.graph) return "I don't know where you are yet.";
  const Pose pose = ctx.pose();
  const auto [lo, hi] = ctx.graph->bounds();
  const double u = (pose.position.x - lo.x) / std::max(hi.x - lo.x, 1e-9);
  const double v = (pose.position.y - lo.y) / std::max(hi.y - lo.y, 1e-9);
  const std::string ns = v > 2.0 / 3.0 ? "north" : (v < 1.0 / 3.0 ? "south" : "");
  const std::string ew = u > 2.0 / 3.0 ? "east" : (u < 1.0 / 3.0 ? "west" : "");
  std::string region;
  if (ns.empty() && ew.empty()) {
    region = "near the center";
  } else {
    region = "in the " + ns + (ns.empty() || ew.empty() ? "" : "-") + ew + " part";
  }
  std::string out = "You are in the " + poi_name(*ctx.graph) + ", " + region + ".";
  const auto near = objects_within(pose, 1e6, *ctx.graph);
  if (!near.empty()) {
    out += " The nearest object is " + object_phrase(near.front(), ctx.prefs, pose.heading_deg) + ".";
  }
  return out;
}

std::string describe_surroundings(const SessionContext& ctx, double radius_m) {
  if (!ctx.graph || ctx.graph->objects.empty()) {
    return "I don't have information about objects here yet.";
  }
  const SceneGraph& g = *ctx.graph;
  const Pose pose = ctx.pose();
  const auto [lo, hi] = g.bounds();
  const UserPrefs& prefs = ctx.prefs;
  std::string out = "The " + poi_name(g) + " is about " +
                    std::to_string(format_distance(hi.x - lo.x, prefs.unit).value) + " by " +
                    distance_text(hi.y - lo.y, prefs) + ".";

  // Innermost object covering the middle of the area.
  const Point2 mid{(lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0};
  const SceneObject* center = nullptr;
  for (const SceneObject& o : g.objects) {
    if (!o.box.contains(mid)) continue;
    if (!center || o.box.half_w * o.box.half_d < center->box.half_w * center->box.half_d ||
        (o.box.half_w * o.box.half_d == center->box.half_w * center->box.half_d && o.id < center->id)) {
      center = &o;
    }
  }
  std::vector<std::string> mentioned;
  if (center && center->box.distance_to(pose.position) <= radius_m) {
    const SceneObject& outer = outermost_container(*center, g);
    if (&outer != center) {
      out += " In the middle there is " + with_article(center->class_label) + " at the center of " +
             with_article(outer.class_label) + ".";
      mentioned.push_back(outer.class_label);
    } else {
      out += " In the middle there is " + with_article(center->class_label) + ".";
    }
    mentioned.push_back(center->class_label);
  }

  std::vector<std::string> parts;
  for (const NearbyObject& n : objects_within(pose, radius_m, g)) {
    if (parts.size() == 3) break;
    if (std::find(mentioned.begin(), mentioned.end(), n.object->class_label) != mentioned.end()) {
      continue;
    }
    mentioned.push_back(n.object->class_label);
    parts.push_back(object_phrase(n, prefs, pose.heading_deg));
  }
  if (!parts.empty()) {
    out += " Nearby: ";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += (i + 1 == parts.size()) ? "; and " : "; ";
      out += parts[i];
    }
    out += ".";
  }
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    cur += text[i];
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      // Swallow closing quotes that belong to this sentence.
      while (i + 1 < text.size() && (text[i + 1] == '"' || text[i + 1] == '\'')) cur += text[++i];
      if (auto s = squeeze(cur); !s.empty()) out.push_back(s);
      cur.clear();
    }
  }
  if (auto s = squeeze(cur); !s.empty()) out.push_back(s);
  return out;
}

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

std::string apply_verbosity(const std::string& text, int budget_words) {
  const auto sentences = split_sentences(text);
  std::string out;
  std::size_t used = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::size_t w = word_count(sentences[i]);
    if (i > 0 && used + w > static_cast<std::size_t>(std::max(budget_words, 0))) break;
    if (i) out += ' ';
    out += sentences[i];
    used += w;
  }
  return out;
}

std::string without_trailing_question(const std::string& text) {
  auto sentences = split_sentences(text);
  if (sentences.empty() || sentences.back().back() != '?') return text;
  std::string q = sentences.back();
  q.pop_back();
  const std::string low = lower(q);
  static const std::vector<std::pair<std::string, std::string>> kOpeners = {
      {"would you like ", "you would like "}, {"do you want ", "you want "},
      {"shall i ", "I should "},              {"should i ", "I should "},
      {"can i ", "I can "},                   {"do you need ", "you need "}};
  std::string statement;
  for (const auto& [from, to] : kOpeners) {
    if (low.rfind(from, 0) == 0) {
      statement = "Let me know if " + to + q.substr(from.size()) + ".";
      break;
    }
  }
  if (statement.empty()) statement = q + ". Let me know if you need more.";
  sentences.back() = statement;
  std::string out;
  for (std::size_t i = 0; i < sentences.size(); ++i) out += (i ? " " : "") + sentences[i];
  return out;
}

namespace {

struct RefLookup {
  std::optional<Annotation> hit;
  std::string failure;
};

RefLookup find_ref(const std::string& ref, const SessionContext& ctx) {
  if (ref.empty()) return {std::nullopt, "Please tell me a word from the note you mean."};
  AnnotationFilter f;
  f.text_contains = ref;
  auto matches = ctx.store->query(f);
  if (matches.empty()) return {std::nullopt, "I couldn't find a note about " + ref + "."};
  std::vector<Annotation> own;
  for (const Annotation& a : matches) {
    if (a.author_id == ctx.user_id) own.push_back(a);
  }
  std::vector<Annotation>& pool = own.empty() ? matches : own;
  std::stable_sort(pool.begin(), pool.end(), [](const Annotation& a, const Annotation& b) {
    return a.updated_at > b.updated_at;
  });
  if (pool.size() > 1 && pool[0].updated_at == pool[1].updated_at) {
    return {std::nullopt, "I found " + number_word(pool.size()) + " notes about " + ref +
                              ". Please repeat the request with more of the note's words."};
  }
  return {pool.front(), {}};
}

PortContext port_context(const SessionContext& ctx) {
  PortContext pc;
  pc.pose = ctx.pose();
  if (ctx.graph) {
    pc.poi_id = ctx.graph->poi_id;
    try {
      pc.location = local_to_geo(ctx.graph->anchor, pc.pose.position);
    } catch (const Error&) {
      pc.location = {ctx.graph->anchor.origin_lat, ctx.graph->anchor.origin_lon};
    }
  }
  return pc;
}

AgentReply ask_port(const std::shared_ptr<AgentPort>& port, const std::string& question,
                    const SessionContext& ctx, const char* what) {
  if (!port) return {std::string("I can't reach the ") + what + " service right now.", {}};
  return {port->ask(question, port_context(ctx)), {}};
}

AgentReply navigate(const intent::Navigate& nav, SessionContext& ctx) {
  if (!ctx.graph || !ctx.grid) return {"I don't have a map of this place yet.", {}};
  const Pose pose = ctx.pose();
  Point2 goal;
  std::string label;
  switch (nav.target) {
    case intent::Navigate::Target::Point:
      goal = nav.point;
      label = "that point";
      break;
    case intent::Navigate::Target::Class: {
      const auto ranked = ranked_by_class(pose, nav.class_label, *ctx.graph);
      if (ranked.empty()) return {"I couldn't find " + with_article(nav.class_label) + " here.", {}};
      std::size_t pick = 0;
      if (nav.rank < 0) pick = ranked.size() - 1;
      if (nav.rank > 0) pick = std::min<std::size_t>(static_cast<std::size_t>(nav.rank), ranked.size() - 1);
      goal = approach_point(*ctx.graph, *ranked[pick].object, pose.position);
      label = "the " + nav.class_label;
      break;
    }
    case intent::Navigate::Target::Annotation: {
      if (!ctx.store || (nav.annotation_ref.empty() && nav.annotation_id.empty())) {
        return {"I couldn't tell where you want to go.", {}};
      }
      std::vector<Annotation> hits;
      if (!nav.annotation_id.empty()) {
        if (auto a = ctx.store->get(nav.annotation_id)) hits.push_back(*a);
      } else {
        AnnotationFilter f;
        f.text_contains = nav.annotation_ref;
        hits = ctx.store->query(f, pose);
      }
      if (hits.empty()) {
        return {"I couldn't find " +
                    (nav.annotation_ref.empty() ? std::string("that note") : nav.annotation_ref) +
                    " here.",
                {}};
      }
      const Annotation& a = hits.front();
      if (a.anchor.kind == AnnotationAnchor::Kind::Object) {
        goal = approach_point(*ctx.graph, *ctx.graph->find(a.anchor.object_id), pose.position);
      } else {
        goal = a.anchor.point;
      }
      label = "the note \"" + a.text + "\"";
      break;
    }
  }
  Route route;
  try {
    route = plan_route(*ctx.graph, *ctx.grid, pose, goal);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoPath || e.code() == ErrorCode::UnreachableDestination ||
        e.code() == ErrorCode::UnwalkableEndpoint) {
      return {"I couldn't find a walkable path to " + label + ".", {}};
    }
    throw;
  }
  Action act;
  act.kind = Action::Kind::StartNavigation;
  act.route = route;
  act.target_label = label;
  if (route.is_trivial()) return {"You are already at " + label + ".", {act}};
  const Point2 next = route.waypoints[1];
  const double b = relative_bearing(pose, next);
  std::string first = render_instruction(InstructionKind::Turn, b, distance(pose.position, next),
                                         ctx.prefs, pose.heading_deg);
  if (const HapticSegment* tag = route.haptic_for(0)) first += ". " + haptic_phrase(*tag);
  return {"Starting guidance to " + label + ", " + distance_text(route.total_length_m, ctx.prefs) +
              " away. " + first + ".",
          {act}};
}

std::string describe_change(const intent::Customize& c, const UserPrefs& prefs) {
  if (c.setting == "unit") return "Distances will now be given in " + std::string(to_string(prefs.unit.kind)) + ".";
  if (c.setting == "direction_format") {
    switch (prefs.direction_format) {
      case DirectionFormat::ClockFace: return "Directions will now use clock positions.";
      case DirectionFormat::Egocentric8: return "Directions will now be given as left and right.";
      case DirectionFormat::EgocentricDegrees: return "Directions will now be given in degrees.";
      case DirectionFormat::Cardinal: return "Directions will now use compass points.";
    }
  }
  if (c.setting == "verbosity_words") {
    return "I will keep replies to about " + std::to_string(prefs.verbosity_words) + " words.";
  }
  if (c.setting == "category_modes") {
    const auto& modes = c.value.at("category_modes");
    const std::string cat = modes.begin().key();
    const std::string mode = modes.begin().value().get<std::string>();
    const std::string how = mode == "auto" ? "play automatically"
                            : mode == "silent" ? "stay silent"
                                               : "be announced with a prompt";
    return capitalize(cat) + " notes will now " + how + ".";
  }
  return "Your settings are updated.";
}

}  // namespace

AgentReply dispatch(const Intent& in, SessionContext& ctx) {
  const Pose pose = ctx.pose();
  return std::visit(
      [&](const auto& it) -> AgentReply {
        using T = std::decay_t<decltype(it)>;
        if constexpr (std::is_same_v<T, intent::WhereAmI>) {
          return {where_am_i(ctx), {}};
        } else if constexpr (std::is_same_v<T, intent::DescribeSurroundings>) {
          return {describe_surroundings(ctx), {}};
        } else if constexpr (std::is_same_v<T, intent::ObjectQuery>) {
          if (!ctx.graph) return {"I don't have a map of this place yet.", {}};
          const auto ranked = ranked_by_class(pose, it.class_label, *ctx.graph);
          if (ranked.empty()) return {"I couldn't find " + with_article(it.class_label) + " here.", {}};
          if (it.attribute == "count") {
            const std::size_t n = ranked.size();
            return {n == 1 ? "There is one " + it.class_label + " here."
                           : "There are " + number_word(n) + " " + plural(it.class_label) + " here.",
                    {}};
          }
          if (it.attribute == "inside") {
            const SceneObject& inner = *ranked.front().object;
            bool inside = false;
            for (const SceneObject& o : ctx.graph->objects) {
              if (o.class_label == it.other_class && o.id != inner.id && contains(o, inner)) inside = true;
            }
            return {std::string(inside ? "Yes, the " : "No, the ") + it.class_label +
                        (inside ? " is inside " : " is not inside ") + with_article(it.other_class) + ".",
                    {}};
          }
          NearbyObject n{ranked.front().object, describe_relative(pose, *ranked.front().object)};
          if (n.description.distance_m <= 0.0) return {"You are at the " + it.class_label + ".", {}};
          return {"The nearest " + it.class_label + " is " +
                      place_phrase(n.description.rel_bearing, ctx.prefs, pose.heading_deg) + ", " +
                      distance_text(n.description.distance_m, ctx.prefs) + " away.",
                  {}};
        } else if constexpr (std::is_same_v<T, intent::Navigate>) {
          return navigate(it, ctx);
        } else if constexpr (std::is_same_v<T, intent::AnnotationQuery>) {
          if (!ctx.store) return {"There are no notes here yet.", {}};
          const auto hits = ctx.store->query(it.filter, pose);
          const std::string cat = it.filter.category ? std::string(to_string(*it.filter.category)) + " " : "";
          const std::string where = it.filter.radius_m ? " nearby" : "";
          if (hits.empty()) return {"I found no " + cat + "notes" + where + ".", {}};
          std::string text = "I found " + number_word(hits.size()) + " " + cat +
                             (hits.size() == 1 ? "note" : "notes") + where + ".";
          const Annotation& first = hits.front();
          const Point2 at = ctx.store->anchor_point(first, pose.position);
          const double d = ctx.store->anchor_distance(first, pose.position);
          if (d > 0.0 && distance(at, pose.position) > 1e-9) {
            text += " The nearest is " +
                    place_phrase(relative_bearing(pose, at), ctx.prefs, pose.heading_deg) + ", " +
                    distance_text(d, ctx.prefs) + " away, and says: " + first.text;
          } else {
            text += " The nearest says: " + first.text;
          }
          return {text, {}};
        } else if constexpr (std::is_same_v<T, intent::AnnotationCreate>) {
          if (!ctx.store) return {"I can't save notes right now.", {}};
          AnnotationAnchor anchor = AnnotationAnchor::at(pose.position);
          std::string where = "here";
          if (it.anchor_hint != "here" && ctx.graph) {
            if (auto near = nearest_by_class(pose, it.anchor_hint, *ctx.graph)) {
              anchor = AnnotationAnchor::on(near->object->id);
              where = "on the " + it.anchor_hint;
            }
          }
          Annotation a;
          try {
            a = ctx.store->create(ctx.user_id, it.text, anchor, std::nullopt, ctx.now);
          } catch (const Error& e) {
            if (e.code() == ErrorCode::EmptyText) return {"The note was empty, so I didn't save it.", {}};
            if (e.code() == ErrorCode::BadAnchor) return {"I couldn't place a note there.", {}};
            throw;
          }
          Action act;
          act.kind = Action::Kind::AnnotationMutation;
          act.mutation = "create";
          act.record = a;
          return {"Saved " + with_article(std::string(to_string(a.category))) + " note " + where +
                      ": " + a.text,
                  {act}};
        } else if constexpr (std::is_same_v<T, intent::AnnotationEdit> ||
                             std::is_same_v<T, intent::AnnotationDelete>) {
          if (!ctx.store) return {"There are no notes here yet.", {}};
          RefLookup found = find_ref(it.ref, ctx);
          if (!found.hit) return {found.failure, {}};
          Action act;
          act.kind = Action::Kind::AnnotationMutation;
          try {
            if constexpr (std::is_same_v<T, intent::AnnotationEdit>) {
              act.mutation = "edit";
              act.record = ctx.store->edit(found.hit->id, ctx.user_id, it.new_text, ctx.now);
              return {"Updated the note. It now says: " + act.record.text, {act}};
            } else {
              ctx.store->remove(found.hit->id, ctx.user_id);
              act.mutation = "delete";
              act.record = *found.hit;
              return {"Deleted the note about " + it.ref + ".", {act}};
            }
          } catch (const Error& e) {
            if (e.code() == ErrorCode::NotAuthor) {
              return {std::is_same_v<T, intent::AnnotationEdit>
                          ? "You can only change notes you created."
                          : "You can only delete notes you created.",
                      {}};
            }
            if (e.code() == ErrorCode::EmptyText) return {"The new text was empty, so nothing changed.", {}};
            throw;
          }
        } else if constexpr (std::is_same_v<T, intent::Customize>) {
          try {
            apply_prefs_delta(ctx.prefs, it.value);
          } catch (const Error&) {
            return {"I couldn't change that setting.", {}};
          }
          Action act;
          act.kind = Action::Kind::ApplyPrefs;
          act.prefs_delta = it.value;
          return {describe_change(it, ctx.prefs), {act}};
        } else if constexpr (std::is_same_v<T, intent::Repeat>) {
          if (ctx.memory.empty()) return {"I have nothing to repeat yet.", {}};
          return {ctx.memory.back().reply, {}};
        } else if constexpr (std::is_same_v<T, intent::VisualQuery>) {
          return ask_port(ctx.ports.visual, it.question, ctx, "camera");
        } else if constexpr (std::is_same_v<T, intent::WebQuery>) {
          return ask_port(ctx.ports.web, it.question, ctx, "search");
        } else if constexpr (std::is_same_v<T, intent::MapQuery>) {
          return ask_port(ctx.ports.map, it.question, ctx, "map");
        } else {
          return {"Sorry, I can't help with that yet. I can describe your surroundings, find objects, "
                  "guide you to them, and read or write notes.",
                  {}};
        }
      },
      in);
}

AgentReply handle_query(const std::string& text, SessionContext& ctx) {
  const Intent in = resolve_intent(text, ctx);
  const bool repeat = std::holds_alternative<intent::Repeat>(in);
  AgentReply reply = dispatch(in, ctx);
  reply.text = without_trailing_question(apply_verbosity(reply.text, ctx.prefs.verbosity_words));
  if (!repeat) ctx.remember(text, reply.text);
  return reply;
}

json to_json(const Action& a) {
  switch (a.kind) {
    case Action::Kind::StartNavigation:
      return {{"kind", "start_navigation"}, {"target", a.target_label}, {"route", to_json(a.route)}};
    case Action::Kind::ApplyPrefs:
      return {{"kind", "apply_prefs"}, {"delta", a.prefs_delta}};
    case Action::Kind::AnnotationMutation:
      return {{"kind", "annotation_mutation"}, {"mutation", a.mutation}, {"record", to_json(a.record)}};
    case Action::Kind::Chime:
      return {{"kind", "chime"}};
    case Action::Kind::Vibrate:
      return {{"kind", "vibrate"}, {"duration_s", a.duration_s}};
  }
  return {};
}

}  // namespace lastmeter
