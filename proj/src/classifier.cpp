// Rule cascade for annotation categories. First matching tier wins.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "lastmeter/annotations.hpp"

namespace lastmeter {

namespace {

// Folds the typographic characters that show up in dictated notes to ASCII
// and lowercases the rest.
std::string fold(std::string_view text) {
  static const std::array<std::pair<std::string_view, std::string_view>, 8> kFold = {{
      {"\xE2\x80\x94", " "},  // em dash
      {"\xE2\x80\x93", " "},  // en dash
      {"\xE2\x80\x99", "'"},
      {"\xE2\x80\x98", "'"},
      {"\xE2\x80\x9C", "\""},
      {"\xE2\x80\x9D", "\""},
      {"\xC3\xA9", "e"},
      {"\xC3\x89", "e"},
  }};
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    bool folded = false;
    for (const auto& [from, to] : kFold) {
      if (text.substr(i, from.size()) == from) {
        out += to;
        i += from.size();
        folded = true;
        break;
      }
    }
    if (folded) continue;
    const char c = text[i++];
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
  }
  return out;
}

std::vector<std::string> words(const std::string& folded) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '\'') cur.pop_back();
    while (!cur.empty() && cur.front() == '\'') cur.erase(cur.begin());
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : folded) {
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') {
      cur += c;
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// A cue is a word sequence; a trailing '*' makes its last word a prefix.
bool matches(const std::vector<std::string>& toks, std::string_view cue) {
  std::vector<std::string> parts = words(std::string(cue));
  const bool prefix = !cue.empty() && cue.back() == '*';
  if (parts.empty() || parts.size() > toks.size()) return false;
  for (std::size_t i = 0; i + parts.size() <= toks.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < parts.size() && ok; ++j) {
      const std::string& t = toks[i + j];
      if (prefix && j + 1 == parts.size()) {
        ok = t.compare(0, parts[j].size(), parts[j]) == 0;
      } else {
        ok = t == parts[j];
      }
    }
    if (ok) return true;
  }
  return false;
}

struct Tier {
  Category category;
  std::vector<std::string_view> cues;
};

const std::vector<Tier>& tiers() {
  static const std::vector<Tier> kTiers = {
      {Category::Safety,
       {"watch out", "careful", "trip*", "hazard*", "danger*", "steps ahead", "branches",
        "caution", "beware"}},
      {Category::Request, {"tell me", "find out", "let me know", "can someone", "does anyone"}},
      {Category::Accessibility,
       {"ramp*", "accessible", "toilet*", "handrail*", "elevator*", "lift", "open seven days",
        "rules", "uneven", "not level", "wheelchair*"}},
      {Category::Amenity,
       {"cafe*", "bus", "shop*", "station*", "bins", "retail", "services", "restaurant*",
        "food"}},
      {Category::Attraction,
       {"history", "historic*", "statue*", "flowers", "roses", "species", "gift", "coreopsis",
        "salvia", "osteospermum", "monument*"}},
      {Category::Layout,
       {"layout", "entrance*", "exit*", "square has", "identical", "sit to the left",
        "one of two", "one of the two", "grassy"}},
      {Category::Experience, {"i", "i'm", "i've", "we", "we're", "my", "our", "me", "us"}},
  };
  return kTiers;
}

constexpr std::array<std::string_view, 10> kInterrogatives = {
    "what", "where", "when", "who", "why", "how", "is", "are", "does", "can"};

bool is_request(const std::string& folded, const std::vector<std::string>& toks) {
  if (folded.find('?') != std::string::npos) return true;
  if (toks.empty()) return false;
  for (std::string_view q : kInterrogatives) {
    if (toks.front() == q) return true;
  }
  return false;
}

}  // namespace

Category classify(std::string_view text) {
  const std::string folded = fold(text);
  const std::vector<std::string> toks = words(folded);
  for (const Tier& tier : tiers()) {
    if (tier.category == Category::Request && is_request(folded, toks)) return Category::Request;
    for (std::string_view cue : tier.cues) {
      if (matches(toks, cue)) return tier.category;
    }
  }
  return Category::Experience;
}

}  // namespace lastmeter
